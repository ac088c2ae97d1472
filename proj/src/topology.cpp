#include "ddsrecon/topology.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ddsrecon/errors.hpp"
#include "ddsrecon/glob.hpp"

namespace ddsrecon::topo {

namespace {

using isect::EdgeStatus;

std::string display_label(const cap::ParticipantInfo& info) {
  std::string_view s = info.subject_name;
  if (s.substr(0, 3) == "CN=") return std::string(s.substr(3));
  return info.subject_name;
}

}  // namespace

std::uint32_t HeuristicGraph::index_of(const ParticipantId& id) const {
  auto it = std::lower_bound(vertices.begin(), vertices.end(), id);
  if (it == vertices.end() || *it != id)
    throw InputError("unknown vertex \"" + id + "\"");
  return static_cast<std::uint32_t>(it - vertices.begin());
}

bool HeuristicGraph::has_edge(std::uint32_t from, std::uint32_t to) const {
  return edges.count({from, to}) != 0;
}

BipartiteGraph build_bipartite(const cap::ParticipantDatabase& db) {
  BipartiteGraph g;
  for (const auto& [guid, info] : db.participants()) g.participants.push_back(guid);

  std::map<std::string, std::uint32_t> pattern_index;
  auto intern = [&](const std::string& source) {
    auto [it, inserted] =
        pattern_index.emplace(source, static_cast<std::uint32_t>(g.topic_patterns.size()));
    if (inserted) g.topic_patterns.push_back(source);
    return it->second;
  };

  std::set<std::pair<std::uint32_t, std::uint32_t>> pub, sub;
  for (std::uint32_t pi = 0; pi < g.participants.size(); ++pi) {
    const auto& info = db.at(g.participants[pi]);
    for (const auto& grant : info.permissions.grants) {
      for (const auto& rule : grant.rules) {
        if (rule.qualifier != perm::Qualifier::Allow) continue;
        if (rule.publish)
          for (const auto& p : rule.publish->topics) pub.insert({pi, intern(p.source())});
        if (rule.subscribe)
          for (const auto& p : rule.subscribe->topics) sub.insert({intern(p.source()), pi});
        if (rule.relay) {
          // relay decomposes into subscribe + publish on the same topics
          for (const auto& p : rule.relay->topics) {
            std::uint32_t t = intern(p.source());
            pub.insert({pi, t});
            sub.insert({t, pi});
          }
        }
      }
    }
  }
  g.publish_edges.assign(pub.begin(), pub.end());
  g.subscribe_edges.assign(sub.begin(), sub.end());
  return g;
}

ContractedGraph collapse_topics(const BipartiteGraph& g, Phase2Mode mode) {
  const std::size_t n = g.topic_patterns.size();
  std::vector<std::uint32_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::uint32_t(std::uint32_t)> find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  std::vector<glob::GlobPattern> parsed;
  parsed.reserve(n);
  for (const auto& s : g.topic_patterns) parsed.emplace_back(s);
  std::vector<glob::PatternAutomaton> automata;
  if (mode == Phase2Mode::ExactIntersection) {
    automata.reserve(n);
    for (const auto& p : parsed) automata.push_back(glob::compile(p));
  }

  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (find(i) == find(j)) continue;
      bool related =
          mode == Phase2Mode::FastFnmatch
              ? glob::two_way_match(parsed[i], parsed[j])
              : !glob::intersect(automata[i], automata[j]).empty_language();
      if (related) unite(i, j);
    }
  }

  ContractedGraph out;
  out.participants = g.participants;
  std::map<std::uint32_t, std::uint32_t> component_index;  // root -> index
  std::vector<std::uint32_t> pattern_component(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint32_t root = find(i);
    auto [it, inserted] = component_index.emplace(
        root, static_cast<std::uint32_t>(out.topic_components.size()));
    if (inserted) out.topic_components.emplace_back();
    pattern_component[i] = it->second;
    out.topic_components[it->second].push_back(g.topic_patterns[i]);
  }

  std::set<std::pair<std::uint32_t, std::uint32_t>> pub, sub;
  for (const auto& [p, t] : g.publish_edges) pub.insert({p, pattern_component[t]});
  for (const auto& [t, p] : g.subscribe_edges) sub.insert({pattern_component[t], p});
  out.publish_edges.assign(pub.begin(), pub.end());
  out.subscribe_edges.assign(sub.begin(), sub.end());
  return out;
}

HeuristicGraph project_participants(const ContractedGraph& g) {
  HeuristicGraph out;
  out.vertices = g.participants;

  std::vector<std::vector<std::uint32_t>> senders(g.topic_components.size());
  std::vector<std::vector<std::uint32_t>> receivers(g.topic_components.size());
  for (const auto& [p, c] : g.publish_edges) senders[c].push_back(p);
  for (const auto& [c, p] : g.subscribe_edges) receivers[c].push_back(p);

  for (std::size_t c = 0; c < g.topic_components.size(); ++c) {
    for (std::uint32_t u : senders[c]) {
      for (std::uint32_t v : receivers[c]) {
        if (u == v) continue;  // a participant trivially reaches itself
        out.edges.emplace(std::make_pair(u, v), EdgeState{});
      }
    }
  }
  return out;
}

HeuristicGraph build_heuristic_graph(const cap::ParticipantDatabase& db,
                                     Phase2Mode mode) {
  HeuristicGraph g = project_participants(collapse_topics(build_bipartite(db), mode));
  g.mode = mode;
  return g;
}

// ---------------------------------------------------------------------------
// Lazy queries

namespace {

// Applies an oracle verdict to the graph edge and reports survival.
bool verify_edge(HeuristicGraph& g, isect::EdgeOracle& oracle, std::uint32_t u,
                 std::uint32_t v, Timestamp at) {
  EdgeState& state = g.edges.at({u, v});
  if (state.status == EdgeStatus::Verified) return true;
  if (state.status == EdgeStatus::Refuted) return false;
  isect::EdgeResult res = oracle.query(g.vertices[u], g.vertices[v], at);
  state.status = res.status;
  state.witness = res.witness;
  return state.status == EdgeStatus::Verified;
}

std::vector<std::vector<std::uint32_t>> live_adjacency(const HeuristicGraph& g,
                                                       bool reversed = false) {
  std::vector<std::vector<std::uint32_t>> adj(g.vertices.size());
  for (const auto& [edge, state] : g.edges) {
    if (state.status == EdgeStatus::Refuted) continue;
    if (reversed)
      adj[edge.second].push_back(edge.first);
    else
      adj[edge.first].push_back(edge.second);
  }
  return adj;  // map order keeps each list sorted
}

std::optional<std::vector<std::uint32_t>> bfs_path(
    const std::vector<std::vector<std::uint32_t>>& adj, std::uint32_t src,
    std::uint32_t dst) {
  std::vector<std::int64_t> parent(adj.size(), -1);
  std::deque<std::uint32_t> queue{src};
  parent[src] = src;
  while (!queue.empty()) {
    std::uint32_t u = queue.front();
    queue.pop_front();
    if (u == dst) break;
    for (std::uint32_t v : adj[u]) {
      if (parent[v] != -1) continue;
      parent[v] = u;
      queue.push_back(v);
    }
  }
  if (parent[dst] == -1) return std::nullopt;
  std::vector<std::uint32_t> path;
  for (std::uint32_t cur = dst;; cur = static_cast<std::uint32_t>(parent[cur])) {
    path.push_back(cur);
    if (cur == src) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<char> reachable_set(const std::vector<std::vector<std::uint32_t>>& adj,
                                std::uint32_t src) {
  std::vector<char> seen(adj.size(), 0);
  std::deque<std::uint32_t> queue{src};
  seen[src] = 1;
  while (!queue.empty()) {
    std::uint32_t u = queue.front();
    queue.pop_front();
    for (std::uint32_t v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        queue.push_back(v);
      }
  }
  return seen;
}

// Unit-capacity max flow (Edmonds-Karp); deterministic given deterministic
// edge insertion order.
class FlowNetwork {
 public:
  static constexpr int kInf = 1 << 29;

  int add_node() {
    adj_.emplace_back();
    return static_cast<int>(adj_.size()) - 1;
  }

  std::size_t add_edge(int u, int v, int cap) {
    std::size_t id = edges_.size();
    adj_[u].push_back(id);
    edges_.push_back({v, cap});
    adj_[v].push_back(id + 1);
    edges_.push_back({u, 0});
    return id;
  }

  int max_flow(int s, int t) {
    int total = 0;
    while (true) {
      std::vector<std::int64_t> via(adj_.size(), -1);
      std::deque<int> queue{s};
      via[s] = -2;
      while (!queue.empty() && via[t] == -1) {
        int u = queue.front();
        queue.pop_front();
        for (std::size_t id : adj_[u]) {
          const Edge& e = edges_[id];
          if (e.cap <= 0 || via[e.to] != -1) continue;
          via[e.to] = static_cast<std::int64_t>(id);
          queue.push_back(e.to);
        }
      }
      if (via[t] == -1) return total;
      int bottleneck = kInf;
      for (int v = t; v != s;) {
        const Edge& e = edges_[via[v]];
        bottleneck = std::min(bottleneck, e.cap);
        v = edges_[via[v] ^ 1].to;
      }
      for (int v = t; v != s;) {
        edges_[via[v]].cap -= bottleneck;
        edges_[via[v] ^ 1].cap += bottleneck;
        v = edges_[via[v] ^ 1].to;
      }
      total += bottleneck;
    }
  }

  int flow_on(std::size_t edge_id) const {
    // flow equals the reverse edge's gained capacity
    return edges_[edge_id + 1].cap;
  }

  std::vector<char> residual_reachable(int s) const {
    std::vector<char> seen(adj_.size(), 0);
    std::deque<int> queue{s};
    seen[s] = 1;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (std::size_t id : adj_[u]) {
        const Edge& e = edges_[id];
        if (e.cap <= 0 || seen[e.to]) continue;
        seen[e.to] = 1;
        queue.push_back(e.to);
      }
    }
    return seen;
  }

 private:
  struct Edge {
    int to;
    int cap;
  };
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adj_;
};

std::vector<ParticipantId> names_of(const HeuristicGraph& g,
                                    const std::vector<std::uint32_t>& ids) {
  std::vector<ParticipantId> out;
  out.reserve(ids.size());
  for (std::uint32_t i : ids) out.push_back(g.vertices[i]);
  return out;
}

}  // namespace

std::optional<PathResult> find_path(HeuristicGraph& g, isect::EdgeOracle& oracle,
                                    const ParticipantId& src,
                                    const ParticipantId& dst, Timestamp at) {
  std::uint32_t s = g.index_of(src);
  std::uint32_t t = g.index_of(dst);
  if (s == t) return PathResult{{src}, {}};

  while (true) {
    auto path = bfs_path(live_adjacency(g), s, t);
    if (!path) return std::nullopt;
    bool all_verified = true;
    for (std::size_t i = 0; i + 1 < path->size(); ++i) {
      if (!verify_edge(g, oracle, (*path)[i], (*path)[i + 1], at)) {
        all_verified = false;
        break;
      }
    }
    if (!all_verified) continue;
    PathResult result;
    result.nodes = names_of(g, *path);
    for (std::size_t i = 0; i + 1 < path->size(); ++i)
      result.edge_witnesses.push_back(
          *g.edges.at({(*path)[i], (*path)[i + 1]}).witness);
    return result;
  }
}

namespace {

// Shared lazy max-flow loop. Source/target vertices keep infinite internal
// capacity; the isolate flags swap one endpoint for a virtual terminal.
struct CutProblem {
  std::optional<std::uint32_t> source;  // absent for isolate_coreachable
  std::optional<std::uint32_t> target;  // absent for isolate_reachable
  bool isolate_reachable = false;       // attach sink to everything reachable
  bool isolate_coreachable = false;     // attach source to everything co-reachable
};

CutResult solve_cut(HeuristicGraph& g, isect::EdgeOracle& oracle,
                    const CutProblem& problem, Timestamp at) {
  const std::size_t n = g.vertices.size();
  while (true) {
    // Active vertex set for virtual-terminal problems, recomputed as edges
    // get refuted.
    std::vector<char> active(n, 1);
    if (problem.isolate_reachable) {
      active = reachable_set(live_adjacency(g), *problem.source);
    } else if (problem.isolate_coreachable) {
      active = reachable_set(live_adjacency(g, /*reversed=*/true),
                             *problem.target);
    }

    FlowNetwork net;
    std::vector<int> in_node(n, -1), out_node(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
      if (!active[v]) continue;
      in_node[v] = net.add_node();
      out_node[v] = net.add_node();
    }
    auto is_terminal = [&](std::size_t v) {
      return (problem.source && v == *problem.source) ||
             (problem.target && v == *problem.target);
    };
    for (std::size_t v = 0; v < n; ++v) {
      if (!active[v]) continue;
      net.add_edge(in_node[v], out_node[v],
                   is_terminal(v) ? FlowNetwork::kInf : 1);
    }

    std::vector<std::pair<std::pair<std::uint32_t, std::uint32_t>, std::size_t>>
        graph_edges;
    for (const auto& [edge, state] : g.edges) {
      if (state.status == EdgeStatus::Refuted) continue;
      if (!active[edge.first] || !active[edge.second]) continue;
      if (problem.source && problem.target && edge.first == *problem.source &&
          edge.second == *problem.target)
        continue;  // handled up front by the caller
      std::size_t id = net.add_edge(out_node[edge.first], in_node[edge.second],
                                    FlowNetwork::kInf);
      graph_edges.emplace_back(edge, id);
    }

    int source_node;
    int sink_node;
    if (problem.isolate_reachable) {
      sink_node = net.add_node();
      for (std::size_t v = 0; v < n; ++v)
        if (active[v] && v != *problem.source)
          net.add_edge(out_node[v], sink_node, FlowNetwork::kInf);
      source_node = out_node[*problem.source];
    } else if (problem.isolate_coreachable) {
      source_node = net.add_node();
      for (std::size_t v = 0; v < n; ++v)
        if (active[v] && v != *problem.target)
          net.add_edge(source_node, in_node[v], FlowNetwork::kInf);
      sink_node = in_node[*problem.target];
    } else {
      source_node = out_node[*problem.source];
      sink_node = in_node[*problem.target];
    }

    net.max_flow(source_node, sink_node);

    // Verify every edge the flow rides on; refuted edges restart the loop.
    bool refuted_any = false;
    for (const auto& [edge, id] : graph_edges) {
      if (net.flow_on(id) <= 0) continue;
      if (!verify_edge(g, oracle, edge.first, edge.second, at))
        refuted_any = true;
    }
    if (refuted_any) continue;

    std::vector<char> side = net.residual_reachable(source_node);
    std::vector<std::uint32_t> cut;
    for (std::size_t v = 0; v < n; ++v) {
      if (!active[v] || is_terminal(v)) continue;
      if (side[in_node[v]] && !side[out_node[v]])
        cut.push_back(static_cast<std::uint32_t>(v));
    }
    CutResult result;
    result.cut_nodes = names_of(g, cut);
    result.certified = true;
    return result;
  }
}

}  // namespace

CutResult min_cut_between(HeuristicGraph& g, isect::EdgeOracle& oracle,
                          const ParticipantId& src, const ParticipantId& dst,
                          Timestamp at) {
  std::uint32_t s = g.index_of(src);
  std::uint32_t t = g.index_of(dst);
  if (s == t) throw InputError("cut query needs distinct source and target");

  if (g.has_edge(s, t) && verify_edge(g, oracle, s, t, at)) {
    CutResult result;
    result.no_vertex_cut = true;
    result.certified = false;
    return result;
  }

  CutProblem problem;
  problem.source = s;
  problem.target = t;
  return solve_cut(g, oracle, problem, at);
}

CutResult isolate_source(HeuristicGraph& g, isect::EdgeOracle& oracle,
                         const ParticipantId& src, Timestamp at) {
  CutProblem problem;
  problem.source = g.index_of(src);
  problem.isolate_reachable = true;
  return solve_cut(g, oracle, problem, at);
}

CutResult isolate_target(HeuristicGraph& g, isect::EdgeOracle& oracle,
                         const ParticipantId& dst, Timestamp at) {
  CutProblem problem;
  problem.target = g.index_of(dst);
  problem.isolate_coreachable = true;
  return solve_cut(g, oracle, problem, at);
}

// ---------------------------------------------------------------------------
// Exports

namespace {

std::string_view status_name(EdgeStatus s) {
  switch (s) {
    case EdgeStatus::Heuristic: return "heuristic";
    case EdgeStatus::Verified: return "verified";
    case EdgeStatus::Refuted: return "refuted";
  }
  return "?";
}

}  // namespace

std::string to_dot(const HeuristicGraph& g, const cap::ParticipantDatabase& db) {
  std::ostringstream out;
  out << "digraph heuristic {\n";
  for (const auto& id : g.vertices) {
    out << "  \"" << id << "\" [label=\"" << display_label(db.at(id)) << "\"];\n";
  }
  for (const auto& [edge, state] : g.edges) {
    out << "  \"" << g.vertices[edge.first] << "\" -> \""
        << g.vertices[edge.second] << "\"";
    switch (state.status) {
      case EdgeStatus::Heuristic: out << " [style=dashed]"; break;
      case EdgeStatus::Verified:
        out << " [style=solid,label=\""
            << state.witness->publisher_action.topic << "\"]";
        break;
      case EdgeStatus::Refuted: out << " [style=dotted,color=red]"; break;
    }
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_json(const HeuristicGraph& g, const cap::ParticipantDatabase& db) {
  nlohmann::ordered_json doc;
  doc["mode"] = g.mode == Phase2Mode::ExactIntersection ? "exact" : "fast";
  doc["vertices"] = nlohmann::ordered_json::array();
  for (const auto& id : g.vertices) {
    const auto& info = db.at(id);
    doc["vertices"].push_back({{"guid", id},
                               {"label", display_label(info)},
                               {"subject", info.subject_name}});
  }
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& [edge, state] : g.edges) {
    nlohmann::ordered_json e;
    e["from"] = g.vertices[edge.first];
    e["to"] = g.vertices[edge.second];
    e["status"] = std::string(status_name(state.status));
    if (state.witness) {
      const auto& act = state.witness->publisher_action;
      nlohmann::ordered_json w;
      w["topic"] = act.topic;
      w["partition"] = act.partition;
      w["domain"] = act.domain_id;
      w["data_tags"] = nlohmann::ordered_json::array();
      for (const auto& t : act.data_tags)
        w["data_tags"].push_back({{"name", t.name}, {"value", t.value}});
      e["witness"] = w;
    }
    doc["edges"].push_back(e);
  }
  return doc.dump(2) + "\n";
}

}  // namespace ddsrecon::topo
