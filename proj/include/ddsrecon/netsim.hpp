#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ddsrecon/capture.hpp"
#include "ddsrecon/permissions.hpp"
#include "ddsrecon/timeutil.hpp"

namespace ddsrecon::sim {

/// Generated permission documents are valid over [2001-01-01, 2031-01-01);
/// queries and simulations default to the midpoint-ish evaluation time below.
inline const Timestamp kValidityNotBefore = 978307200;   // 2001-01-01T00:00:00Z
inline const Timestamp kValidityNotAfter = 1924992000;   // 2031-01-01T00:00:00Z
inline const Timestamp kScenarioEvalTime = 1767225600;   // 2026-01-01T00:00:00Z
inline const Timestamp kCaptureBaseTime = 1767225600;

struct Participant {
  std::string id;     // e.g. "5,0" for grids, "n3" for random scenarios
  std::string label;  // human-readable form of the same thing
  perm::PermissionsFile permissions;
};

struct Scenario {
  std::string shape;  // "grid R C" or "random N P"
  std::uint64_t seed = 0;
  std::vector<Participant> participants;               // id order
  std::set<std::pair<std::string, std::string>> intended_adjacency;
};

/// One participant per cell publishing its own topic "cell/<r>/<c>" and
/// subscribing each 4-neighbour's topic; minimal permissions, default DENY.
Scenario generate_grid(int rows, int cols, std::uint64_t seed);

/// Directed Erdős–Rényi intent; each sampled edge u→v gets a dedicated
/// literal topic "link/<u>/<v>" so permissions realize exactly the sampled
/// edges.
Scenario generate_random(int n, double edge_probability, std::uint64_t seed);

/// A scenario with an explicit directed edge set over participants
/// "n0".."n<k-1>" (test fuel for query/cut oracles).
Scenario scenario_from_edges(int n,
                             const std::set<std::pair<int, int>>& edges,
                             std::uint64_t seed);

/// One handshake observation per participant, with synthetic endpoints and
/// deterministic GUIDs derived from (seed, index).
std::vector<cap::CaptureRecord> emit_capture(const Scenario& s);

/// GUID assigned to participant `index` of a scenario with `seed`.
std::string scenario_guid(std::uint64_t seed, std::size_t index);

struct Delivery {
  std::string origin;
  std::string receiver;
  int round = 0;
  std::vector<std::string> lineage;  // origin ... receiver, duplicate-free
};

struct DeliveryReport {
  std::vector<Delivery> deliveries;  // first delivery per (origin, receiver)
  int rounds_run = 0;

  bool delivered(const std::string& origin, const std::string& receiver) const;
};

/// Synchronous-round KeepAlive broadcast with relaying. Every live
/// participant originates on each topic it may publish and relays the first
/// copy of every foreign KeepAlive it receives, appending its own id to the
/// lineage; ids already in the lineage are never re-entered. A message moves
/// on a topic iff the compliant access-control decision allows the publish
/// and the subscribe — the simulation never consults the topology layer.
DeliveryReport simulate(const Scenario& s, const std::set<std::string>& removed,
                        int rounds);

// Scenario and report text formats (documented in docs/formats.md).
std::string save_scenario(const Scenario& s);
Scenario load_scenario(std::string_view text);
std::string report_lines(const DeliveryReport& report);

}  // namespace ddsrecon::sim
