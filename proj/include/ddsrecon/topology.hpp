#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddsrecon/capture.hpp"
#include "ddsrecon/intersect.hpp"

namespace ddsrecon::topo {

using cap::ParticipantId;

/// Phase 1: participants on one side, de-duplicated topic expressions on the
/// other. Publish capability points participant→pattern, subscribe
/// pattern→participant; relay contributes both. Deny rules contribute
/// nothing.
struct BipartiteGraph {
  std::vector<ParticipantId> participants;  // sorted
  std::vector<std::string> topic_patterns;  // first-appearance order, unique
  std::vector<std::pair<std::uint32_t, std::uint32_t>> publish_edges;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> subscribe_edges;
};

/// Phase 2: topic patterns merged into connected components under the chosen
/// relation.
struct ContractedGraph {
  std::vector<ParticipantId> participants;
  std::vector<std::vector<std::string>> topic_components;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> publish_edges;    // participant -> component
  std::vector<std::pair<std::uint32_t, std::uint32_t>> subscribe_edges;  // component -> participant
};

enum class Phase2Mode { FastFnmatch, ExactIntersection };

struct EdgeState {
  isect::EdgeStatus status = isect::EdgeStatus::Heuristic;
  std::optional<isect::ActionPair> witness;
};

/// Phase 3 output: the participant-level over-approximation, refined in
/// place as queries verify or refute edges.
struct HeuristicGraph {
  Phase2Mode mode = Phase2Mode::ExactIntersection;
  std::vector<ParticipantId> vertices;  // sorted
  std::map<std::pair<std::uint32_t, std::uint32_t>, EdgeState> edges;

  std::uint32_t index_of(const ParticipantId& id) const;  // InputError
  bool has_edge(std::uint32_t from, std::uint32_t to) const;
};

BipartiteGraph build_bipartite(const cap::ParticipantDatabase& db);
ContractedGraph collapse_topics(const BipartiteGraph& g, Phase2Mode mode);
HeuristicGraph project_participants(const ContractedGraph& g);

/// Convenience: all three phases.
HeuristicGraph build_heuristic_graph(const cap::ParticipantDatabase& db,
                                     Phase2Mode mode);

struct PathResult {
  std::vector<ParticipantId> nodes;
  std::vector<isect::ActionPair> edge_witnesses;  // nodes.size() - 1 entries
};

struct CutResult {
  std::vector<ParticipantId> cut_nodes;  // sorted
  bool certified = false;
  // A verified direct source→target edge admits no interior vertex cut.
  bool no_vertex_cut = false;
};

/// Shortest-hop path over non-refuted edges, verifying each candidate edge
/// through the oracle before committing; refuted edges are pruned and the
/// search restarts. Returns a fully verified path or nothing.
std::optional<PathResult> find_path(HeuristicGraph& g, isect::EdgeOracle& oracle,
                                    const ParticipantId& src,
                                    const ParticipantId& dst, Timestamp at);

/// Minimum vertex cut separating src from dst (exclusive of both), via
/// unit-capacity vertex splitting and lazy edge verification: flow-carrying
/// edges are verified, refuted ones removed, and the flow recomputed until
/// the maximum flow rides on verified edges only.
CutResult min_cut_between(HeuristicGraph& g, isect::EdgeOracle& oracle,
                          const ParticipantId& src, const ParticipantId& dst,
                          Timestamp at);

/// Minimum vertex set whose removal leaves nothing reachable from src.
CutResult isolate_source(HeuristicGraph& g, isect::EdgeOracle& oracle,
                         const ParticipantId& src, Timestamp at);

/// Minimum vertex set whose removal leaves dst unreachable from everything.
CutResult isolate_target(HeuristicGraph& g, isect::EdgeOracle& oracle,
                         const ParticipantId& dst, Timestamp at);

std::string to_dot(const HeuristicGraph& g, const cap::ParticipantDatabase& db);
std::string to_json(const HeuristicGraph& g, const cap::ParticipantDatabase& db);

}  // namespace ddsrecon::topo
