#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddsrecon/permissions.hpp"
#include "ddsrecon/timeutil.hpp"

namespace ddsrecon::cap {

using ParticipantId = std::string;  // 32-hex-digit participant GUID

/// One observed handshake token: who was seen, where, and the permission
/// document they presented. Serialized one record per line (see
/// docs/formats.md).
struct CaptureRecord {
  Timestamp timestamp = 0;
  std::string source_address;       // "addr:port"
  std::string destination_address;  // "addr:port"
  std::string participant_guid;     // 32 lowercase hex digits
  std::string subject_name;
  std::string permissions_document;  // raw XML bytes

  bool operator==(const CaptureRecord&) const = default;
};

std::string to_line(const CaptureRecord& record);
CaptureRecord parse_line(std::string_view line, std::size_t record_index);

struct ParticipantInfo {
  std::string subject_name;
  perm::PermissionsFile permissions;
  std::string canonical_document;  // serialize_permissions(permissions)
  std::set<std::string> endpoints;
  Timestamp first_seen = 0;
  Timestamp last_seen = 0;
};

struct Anomaly {
  std::size_t record_index = 0;
  ParticipantId guid;
  std::string detail;
};

struct LoadReport {
  std::vector<Anomaly> anomalies;
  std::size_t records_loaded = 0;
};

/// Accumulated view of every participant seen so far. Identity is the GUID;
/// two participants may share a subject name. Ingestion is single-writer;
/// copies of the database act as read snapshots.
class ParticipantDatabase {
 public:
  bool contains(const ParticipantId& guid) const;
  const ParticipantInfo& at(const ParticipantId& guid) const;  // InputError
  const std::map<ParticipantId, ParticipantInfo>& participants() const {
    return participants_;
  }
  std::size_t size() const { return participants_.size(); }

  /// Resolves a CLI-facing name: exact GUID, exact subject name, or the
  /// subject's common-name part ("CN=x" matches "x"). Throws InputError when
  /// unknown or ambiguous.
  ParticipantId resolve(std::string_view name) const;

  friend LoadReport load_capture(std::span<const CaptureRecord> records,
                                 ParticipantDatabase& into);

 private:
  std::map<ParticipantId, ParticipantInfo> participants_;
};

/// Merges records into the database. Endpoints and sighting times
/// accumulate; a record carrying a different document for a known GUID is
/// reported as an anomaly, never merged. Malformed records throw InputError
/// naming the record index.
LoadReport load_capture(std::span<const CaptureRecord> records,
                        ParticipantDatabase& into);

/// Decodes a raw byte stream into capture records via a named codec. The
/// built-in codec is "capture-text" (the line format above); a real RTPS
/// frame decoder can be registered behind the same seam.
std::vector<CaptureRecord> decode_capture(std::string_view frames,
                                          std::string_view codec = "capture-text");

std::vector<std::string> known_codecs();

}  // namespace ddsrecon::cap
