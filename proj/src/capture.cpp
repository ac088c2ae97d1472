#include "ddsrecon/capture.hpp"

#include <algorithm>

#include "ddsrecon/encoding.hpp"
#include "ddsrecon/errors.hpp"

namespace ddsrecon::cap {

namespace {

constexpr std::string_view kFieldOrder[] = {"ts",   "src",     "dst",
                                            "guid", "subject", "perm"};

[[noreturn]] void record_fail(std::size_t index, const std::string& msg) {
  throw InputError("capture record " + std::to_string(index) + ": " + msg);
}

}  // namespace

std::string to_line(const CaptureRecord& r) {
  std::string out;
  out += "ts=" + format_timestamp(r.timestamp);
  out += " src=" + r.source_address;
  out += " dst=" + r.destination_address;
  out += " guid=" + r.participant_guid;
  out += " subject=" + enc::percent_encode(r.subject_name);
  out += " perm=" + enc::base64_encode(r.permissions_document);
  return out;
}

CaptureRecord parse_line(std::string_view line, std::size_t record_index) {
  std::map<std::string, std::string, std::less<>> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos) end = line.size();
    std::string_view token = line.substr(pos, end - pos);
    pos = end + 1;
    if (token.empty()) continue;
    std::size_t eq = token.find('=');
    if (eq == std::string_view::npos)
      record_fail(record_index, "field without '=': \"" + std::string(token) + "\"");
    std::string key(token.substr(0, eq));
    bool known = std::find(std::begin(kFieldOrder), std::end(kFieldOrder), key) !=
                 std::end(kFieldOrder);
    if (!known) record_fail(record_index, "unknown field \"" + key + "\"");
    if (!fields.emplace(key, std::string(token.substr(eq + 1))).second)
      record_fail(record_index, "duplicate field \"" + key + "\"");
  }
  for (std::string_view required : kFieldOrder)
    if (fields.find(required) == fields.end())
      record_fail(record_index, "missing field \"" + std::string(required) + "\"");

  CaptureRecord r;
  try {
    r.timestamp = parse_timestamp(fields["ts"]);
    r.source_address = fields["src"];
    r.destination_address = fields["dst"];
    r.participant_guid = enc::to_lower(fields["guid"]);
    r.subject_name = enc::percent_decode(fields["subject"]);
    r.permissions_document = enc::base64_decode(fields["perm"]);
  } catch (const InputError& e) {
    record_fail(record_index, e.what());
  }
  if (r.participant_guid.size() != 32 || !enc::is_hex_string(r.participant_guid))
    record_fail(record_index,
                "guid must be 32 hex digits, got \"" + r.participant_guid + "\"");
  return r;
}

bool ParticipantDatabase::contains(const ParticipantId& guid) const {
  return participants_.count(guid) != 0;
}

const ParticipantInfo& ParticipantDatabase::at(const ParticipantId& guid) const {
  auto it = participants_.find(guid);
  if (it == participants_.end())
    throw InputError("unknown participant \"" + guid + "\"");
  return it->second;
}

ParticipantId ParticipantDatabase::resolve(std::string_view name) const {
  auto it = participants_.find(std::string(name));
  if (it != participants_.end()) return it->first;
  std::vector<ParticipantId> hits;
  for (const auto& [guid, info] : participants_) {
    if (info.subject_name == name) {
      hits.push_back(guid);
      continue;
    }
    // match against the CN component of "CN=x" style subjects
    std::string_view subject = info.subject_name;
    if (subject.substr(0, 3) == "CN=" && subject.substr(3) == name)
      hits.push_back(guid);
  }
  if (hits.size() == 1) return hits.front();
  if (hits.empty())
    throw InputError("unknown participant \"" + std::string(name) + "\"");
  throw InputError("ambiguous participant name \"" + std::string(name) +
                   "\" (" + std::to_string(hits.size()) + " matches)");
}

LoadReport load_capture(std::span<const CaptureRecord> records,
                        ParticipantDatabase& into) {
  LoadReport report;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const CaptureRecord& r = records[i];
    if (r.participant_guid.size() != 32 || !enc::is_hex_string(r.participant_guid))
      record_fail(i, "guid must be 32 hex digits");
    perm::PermissionsFile parsed;
    try {
      parsed = perm::parse_permissions(r.permissions_document);
    } catch (const InputError& e) {
      throw InputError("capture record " + std::to_string(i) + " (guid " +
                       r.participant_guid + "): embedded permissions: " + e.what());
    }
    std::string canonical = perm::serialize_permissions(parsed);
    auto it = into.participants_.find(r.participant_guid);
    if (it == into.participants_.end()) {
      ParticipantInfo info;
      info.subject_name = r.subject_name;
      info.permissions = std::move(parsed);
      info.canonical_document = std::move(canonical);
      info.endpoints = {r.source_address};
      info.first_seen = r.timestamp;
      info.last_seen = r.timestamp;
      into.participants_.emplace(r.participant_guid, std::move(info));
    } else {
      ParticipantInfo& info = it->second;
      if (info.canonical_document != canonical) {
        report.anomalies.push_back(
            {i, r.participant_guid,
             "conflicting permissions document for guid (kept first-seen copy)"});
      } else if (info.subject_name != r.subject_name) {
        report.anomalies.push_back(
            {i, r.participant_guid, "conflicting subject name \"" +
                                        r.subject_name + "\" vs \"" +
                                        info.subject_name + "\""});
      }
      info.endpoints.insert(r.source_address);
      info.first_seen = std::min(info.first_seen, r.timestamp);
      info.last_seen = std::max(info.last_seen, r.timestamp);
    }
    ++report.records_loaded;
  }
  return report;
}

std::vector<CaptureRecord> decode_capture(std::string_view frames,
                                          std::string_view codec) {
  if (codec != "capture-text")
    throw InputError("unknown capture codec \"" + std::string(codec) + "\"");
  std::vector<CaptureRecord> records;
  std::size_t pos = 0;
  std::size_t index = 0;
  while (pos < frames.size()) {
    std::size_t end = frames.find('\n', pos);
    if (end == std::string_view::npos) end = frames.size();
    std::string_view line = frames.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line[0] == '#') continue;
    records.push_back(parse_line(line, index));
    ++index;
  }
  return records;
}

std::vector<std::string> known_codecs() { return {"capture-text"}; }

}  // namespace ddsrecon::cap
