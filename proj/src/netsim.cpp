#include "ddsrecon/netsim.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "ddsrecon/encoding.hpp"
#include "ddsrecon/errors.hpp"
#include "ddsrecon/pdp.hpp"

namespace ddsrecon::sim {

namespace {

perm::Grant make_grant(const std::string& subject) {
  perm::Grant g;
  g.subject_name = subject;
  g.validity.not_before = kValidityNotBefore;
  g.validity.not_after = kValidityNotAfter;
  g.default_qualifier = perm::Qualifier::Deny;
  return g;
}

perm::Rule allow_rule(perm::Verb verb, const std::vector<std::string>& topics) {
  perm::Rule r;
  r.qualifier = perm::Qualifier::Allow;
  r.domains.add_id(0);
  perm::CriteriaSet crit;
  for (const auto& t : topics) crit.topics.emplace_back(t);
  switch (verb) {
    case perm::Verb::Publish: r.publish = std::move(crit); break;
    case perm::Verb::Subscribe: r.subscribe = std::move(crit); break;
    case perm::Verb::Relay: r.relay = std::move(crit); break;
  }
  return r;
}

perm::PermissionsFile make_minimal_file(const std::string& id,
                                        const std::vector<std::string>& pub_topics,
                                        const std::vector<std::string>& sub_topics) {
  perm::PermissionsFile f;
  f.subject_name = "CN=" + id;
  perm::Grant g = make_grant(f.subject_name);
  if (!pub_topics.empty()) g.rules.push_back(allow_rule(perm::Verb::Publish, pub_topics));
  if (!sub_topics.empty())
    g.rules.push_back(allow_rule(perm::Verb::Subscribe, sub_topics));
  if (g.rules.empty()) {
    // a participant with nothing to say still presents a valid document:
    // one subscribe rule for its own (never published) control topic
    g.rules.push_back(allow_rule(perm::Verb::Subscribe, {"void/" + id}));
  }
  f.grants.push_back(std::move(g));
  return f;
}

std::string cell_topic(int r, int c) {
  return "cell/" + std::to_string(r) + "/" + std::to_string(c);
}

std::string cell_id(int r, int c) {
  return std::to_string(r) + "," + std::to_string(c);
}

}  // namespace

std::string scenario_guid(std::uint64_t seed, std::size_t index) {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx",
                static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(index + 1));
  return buf;
}

Scenario generate_grid(int rows, int cols, std::uint64_t seed) {
  if (rows < 1 || cols < 1)
    throw InputError("grid dimensions must be positive");
  Scenario s;
  s.shape = "grid " + std::to_string(rows) + " " + std::to_string(cols);
  s.seed = seed;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::vector<std::string> sub_topics;
      const int dr[] = {-1, 1, 0, 0};
      const int dc[] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int nr = r + dr[k], nc = c + dc[k];
        if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
        sub_topics.push_back(cell_topic(nr, nc));
        s.intended_adjacency.insert({cell_id(nr, nc), cell_id(r, c)});
        s.intended_adjacency.insert({cell_id(r, c), cell_id(nr, nc)});
      }
      std::sort(sub_topics.begin(), sub_topics.end());
      Participant p;
      p.id = cell_id(r, c);
      p.label = "(" + std::to_string(r) + "," + std::to_string(c) + ")";
      p.permissions = make_minimal_file(p.id, {cell_topic(r, c)}, sub_topics);
      s.participants.push_back(std::move(p));
    }
  }
  return s;
}

Scenario scenario_from_edges(int n, const std::set<std::pair<int, int>>& edges,
                             std::uint64_t seed) {
  Scenario s;
  s.shape = "edges " + std::to_string(n);
  s.seed = seed;
  auto node_id = [](int i) { return "n" + std::to_string(i); };
  auto link_topic = [&](int u, int v) {
    return "link/" + node_id(u) + "/" + node_id(v);
  };
  for (int i = 0; i < n; ++i) {
    std::vector<std::string> pub, sub;
    for (const auto& [u, v] : edges) {
      if (u == v) continue;
      if (u == i) pub.push_back(link_topic(u, v));
      if (v == i) sub.push_back(link_topic(u, v));
    }
    Participant p;
    p.id = node_id(i);
    p.label = p.id;
    p.permissions = make_minimal_file(p.id, pub, sub);
    s.participants.push_back(std::move(p));
  }
  for (const auto& [u, v] : edges)
    if (u != v) s.intended_adjacency.insert({node_id(u), node_id(v)});
  return s;
}

Scenario generate_random(int n, double edge_probability, std::uint64_t seed) {
  if (n < 0 || edge_probability < 0.0 || edge_probability > 1.0)
    throw InputError("random scenario needs n >= 0 and probability in [0, 1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::set<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (coin(rng) < edge_probability) edges.insert({u, v});
    }
  Scenario s = scenario_from_edges(n, edges, seed);
  s.shape = "random " + std::to_string(n);
  return s;
}

std::vector<cap::CaptureRecord> emit_capture(const Scenario& s) {
  std::vector<cap::CaptureRecord> records;
  records.reserve(s.participants.size());
  for (std::size_t i = 0; i < s.participants.size(); ++i) {
    const Participant& p = s.participants[i];
    cap::CaptureRecord r;
    r.timestamp = kCaptureBaseTime + static_cast<Timestamp>(i);
    r.source_address = "10.0." + std::to_string(i / 250) + "." +
                       std::to_string(i % 250 + 1) + ":7400";
    r.destination_address = "239.255.0.1:7400";
    r.participant_guid = scenario_guid(s.seed, i);
    r.subject_name = p.permissions.subject_name;
    r.permissions_document = perm::serialize_permissions(p.permissions);
    records.push_back(std::move(r));
  }
  return records;
}

bool DeliveryReport::delivered(const std::string& origin,
                               const std::string& receiver) const {
  for (const auto& d : deliveries)
    if (d.origin == origin && d.receiver == receiver) return true;
  return false;
}

DeliveryReport simulate(const Scenario& s, const std::set<std::string>& removed,
                        int rounds) {
  if (rounds < 1) throw InputError("simulation needs at least one round");
  for (const auto& id : removed) {
    bool known = std::any_of(s.participants.begin(), s.participants.end(),
                             [&](const Participant& p) { return p.id == id; });
    if (!known) throw InputError("cannot remove unknown participant \"" + id + "\"");
  }

  // Topic universe: every literal topic expression in the scenario.
  std::set<std::string> topics;
  for (const Participant& p : s.participants)
    for (const auto& grant : p.permissions.grants)
      for (const auto& rule : grant.rules)
        for (auto verb :
             {perm::Verb::Publish, perm::Verb::Subscribe, perm::Verb::Relay})
          if (const perm::CriteriaSet* c = rule.criteria_for(verb))
            for (const auto& t : c->topics)
              if (t.source().find_first_of("*?[\\") == std::string::npos)
                topics.insert(t.source());

  std::vector<const Participant*> live;
  for (const Participant& p : s.participants)
    if (!removed.count(p.id)) live.push_back(&p);

  auto allowed = [&](const Participant& p, perm::Verb verb,
                     const std::string& topic) {
    perm::ActionRequest act;
    act.subject_name = p.permissions.subject_name;
    act.domain_id = 0;
    act.verb = verb;
    act.topic = topic;
    return pdp::evaluate(p.permissions, act, kScenarioEvalTime).first ==
           perm::Qualifier::Allow;
  };

  // Precompute per-participant publishable topics and per-topic subscribers.
  std::map<std::string, std::vector<std::string>> publishable;  // id -> topics
  std::map<std::string, std::vector<const Participant*>> subscribers;
  for (const Participant* p : live) {
    for (const std::string& t : topics) {
      if (allowed(*p, perm::Verb::Publish, t)) publishable[p->id].push_back(t);
      if (allowed(*p, perm::Verb::Subscribe, t)) subscribers[t].push_back(p);
    }
  }

  struct Message {
    std::string origin;
    std::vector<std::string> lineage;
  };

  DeliveryReport report;
  report.rounds_run = rounds;
  // first-reception dedupe per (receiver, origin); a participant knows its
  // own KeepAlive from the start
  std::set<std::pair<std::string, std::string>> received;
  for (const Participant* p : live) received.insert({p->id, p->id});

  // messages to transmit next round, per sender
  std::map<std::string, std::vector<Message>> outbox;
  for (const Participant* p : live)
    outbox[p->id].push_back({p->id, {p->id}});

  for (int round = 1; round <= rounds; ++round) {
    std::map<std::string, std::vector<Message>> next_outbox;
    bool any = false;
    for (const Participant* sender : live) {
      auto it = outbox.find(sender->id);
      if (it == outbox.end()) continue;
      const auto& pub_topics = publishable[sender->id];
      for (const Message& msg : it->second) {
        for (const std::string& topic : pub_topics) {
          for (const Participant* receiver : subscribers[topic]) {
            if (receiver->id == sender->id) continue;
            if (received.count({receiver->id, msg.origin})) continue;
            if (std::find(msg.lineage.begin(), msg.lineage.end(),
                          receiver->id) != msg.lineage.end())
              continue;
            received.insert({receiver->id, msg.origin});
            Delivery d;
            d.origin = msg.origin;
            d.receiver = receiver->id;
            d.round = round;
            d.lineage = msg.lineage;
            d.lineage.push_back(receiver->id);
            next_outbox[receiver->id].push_back({msg.origin, d.lineage});
            report.deliveries.push_back(std::move(d));
            any = true;
          }
        }
      }
    }
    outbox = std::move(next_outbox);
    if (!any && outbox.empty()) break;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Formats

std::string save_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "scenario v1\n";
  out << "shape " << s.shape << "\n";
  out << "seed " << s.seed << "\n";
  for (const Participant& p : s.participants) {
    out << "participant " << p.id << " " << enc::percent_encode(p.label) << " "
        << enc::base64_encode(perm::serialize_permissions(p.permissions))
        << "\n";
  }
  for (const auto& [from, to] : s.intended_adjacency)
    out << "adjacency " << from << " " << to << "\n";
  return out.str();
}

Scenario load_scenario(std::string_view text) {
  Scenario s;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  auto fail = [&](const std::string& msg) -> void {
    throw InputError("scenario line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string kind;
    fields >> kind;
    if (!header_seen) {
      std::string version;
      fields >> version;
      if (kind != "scenario" || version != "v1")
        fail("expected header \"scenario v1\"");
      header_seen = true;
      continue;
    }
    if (kind == "shape") {
      std::string rest;
      std::getline(fields, rest);
      if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
      s.shape = rest;
    } else if (kind == "seed") {
      if (!(fields >> s.seed)) fail("bad seed");
    } else if (kind == "participant") {
      std::string id, label, doc;
      if (!(fields >> id >> label >> doc)) fail("bad participant record");
      Participant p;
      p.id = id;
      p.label = enc::percent_decode(label);
      p.permissions = perm::parse_permissions(enc::base64_decode(doc));
      s.participants.push_back(std::move(p));
    } else if (kind == "adjacency") {
      std::string from, to;
      if (!(fields >> from >> to)) fail("bad adjacency record");
      s.intended_adjacency.insert({from, to});
    } else {
      fail("unknown record \"" + kind + "\"");
    }
  }
  if (!header_seen) throw InputError("scenario: missing header");
  return s;
}

std::string report_lines(const DeliveryReport& report) {
  std::ostringstream out;
  out << "rounds " << report.rounds_run << "\n";
  for (const auto& d : report.deliveries) {
    out << "delivery origin=" << d.origin << " receiver=" << d.receiver
        << " round=" << d.round << " lineage=";
    for (std::size_t i = 0; i < d.lineage.size(); ++i) {
      if (i) out << ">";
      out << d.lineage[i];
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace ddsrecon::sim
