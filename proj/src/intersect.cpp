#include "ddsrecon/intersect.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "ddsrecon/errors.hpp"
#include "ddsrecon/glob.hpp"

namespace ddsrecon::isect {

namespace {

using glob::GlobPattern;
using glob::PatternAutomaton;
using perm::ActionRequest;
using perm::CriteriaSet;
using perm::Grant;
using perm::PermissionsFile;
using perm::Qualifier;
using perm::Rule;
using perm::Verb;

class AutomatonCache {
 public:
  const PatternAutomaton& get(const GlobPattern& p) {
    auto it = cache_.find(p.source());
    if (it == cache_.end())
      it = cache_.emplace(p.source(), glob::compile(p)).first;
    return it->second;
  }
  const PatternAutomaton& any() {
    static const PatternAutomaton a = glob::compile(GlobPattern("*"));
    return a;
  }
  const PatternAutomaton& empty_string() {
    static const PatternAutomaton a = PatternAutomaton::literal("");
    return a;
  }

 private:
  std::map<std::string, PatternAutomaton> cache_;
};

const Grant* first_applicable_grant(const PermissionsFile& f, Timestamp at) {
  for (const Grant& g : f.grants)
    if (g.subject_name == f.subject_name && g.validity.covers(at)) return &g;
  return nullptr;
}

// A candidate allow rule on one side. The grant default ALLOW behaves like a
// trailing rule matching every topic, partition, domain and tag set.
struct Candidate {
  std::size_t rule_index = 0;  // rules.size() for the default catch-all
  const CriteriaSet* criteria = nullptr;
  bool catch_all = false;

  bool allows_domain(const Grant& g, int d) const {
    return catch_all || g.rules[rule_index].domains.contains(d);
  }
};

std::vector<Candidate> collect_candidates(const Grant& g, Verb verb) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < g.rules.size(); ++i) {
    const Rule& r = g.rules[i];
    if (r.qualifier != Qualifier::Allow) continue;
    if (const CriteriaSet* c = r.criteria_for(verb))
      out.push_back({i, c, false});
  }
  if (g.default_qualifier == Qualifier::Allow)
    out.push_back({g.rules.size(), nullptr, true});
  return out;
}

// Representatives of the domain-id equivalence classes induced by every
// interval in both grants: the left endpoint of each class.
std::vector<int> domain_representatives(const Grant& a, const Grant& b) {
  std::set<int> reps = {0};
  auto collect = [&](const Grant& g) {
    for (const Rule& r : g.rules) {
      for (const auto& [lo, hi] : r.domains.entries()) {
        reps.insert(lo);
        reps.insert(hi + 1);
      }
    }
  };
  collect(a);
  collect(b);
  return {reps.begin(), reps.end()};
}

std::size_t deny_rule_count(const Grant& g) {
  std::size_t n = 0;
  for (const Rule& r : g.rules)
    if (r.qualifier == Qualifier::Deny) ++n;
  return n;
}

// Language of one criterion dimension as a list of automata (any-of).
std::vector<const PatternAutomaton*> topic_languages(const Candidate& c,
                                                     AutomatonCache& cache) {
  if (c.catch_all) return {&cache.any()};
  std::vector<const PatternAutomaton*> out;
  for (const auto& p : c.criteria->topics) out.push_back(&cache.get(p));
  return out;
}

std::vector<const PatternAutomaton*> partition_languages(const Candidate& c,
                                                         AutomatonCache& cache) {
  if (c.catch_all) return {&cache.any()};
  if (c.criteria->partitions.empty()) return {&cache.empty_string()};
  std::vector<const PatternAutomaton*> out;
  for (const auto& p : c.criteria->partitions) out.push_back(&cache.get(p));
  return out;
}

// Subtracts a deny rule's topic (or partition) language.
PatternAutomaton subtract_topics(PatternAutomaton lang, const CriteriaSet& crit,
                                 AutomatonCache& cache) {
  for (const auto& p : crit.topics) lang = glob::difference(lang, cache.get(p));
  return lang;
}

PatternAutomaton subtract_partitions(PatternAutomaton lang,
                                     const CriteriaSet& crit,
                                     AutomatonCache& cache) {
  if (crit.partitions.empty())
    return glob::difference(lang, cache.empty_string());
  for (const auto& p : crit.partitions)
    lang = glob::difference(lang, cache.get(p));
  return lang;
}

std::optional<ActionPair> solve(const PermissionsFile& pub_file,
                                const PermissionsFile& sub_file, Timestamp at,
                                IntersectStats* stats) {
  IntersectStats local;
  IntersectStats& st = stats ? *stats : local;

  const Grant* pub_grant = first_applicable_grant(pub_file, at);
  const Grant* sub_grant = first_applicable_grant(sub_file, at);
  if (pub_grant == nullptr || sub_grant == nullptr) return std::nullopt;

  AutomatonCache cache;
  auto pub_candidates = collect_candidates(*pub_grant, Verb::Publish);
  auto sub_candidates = collect_candidates(*sub_grant, Verb::Subscribe);
  auto domains = domain_representatives(*pub_grant, *sub_grant);
  const std::size_t depth_bound =
      deny_rule_count(*pub_grant) + deny_rule_count(*sub_grant);

  for (const Candidate& pc : pub_candidates) {
    for (const Candidate& sc : sub_candidates) {
      // Required tag set: the union of both criteria's tags. Anything less
      // fails the allow rules; anything more only risks extra deny matches.
      std::vector<perm::DataTag> tags;
      if (!pc.catch_all)
        tags.insert(tags.end(), pc.criteria->data_tags.begin(),
                    pc.criteria->data_tags.end());
      if (!sc.catch_all)
        tags.insert(tags.end(), sc.criteria->data_tags.begin(),
                    sc.criteria->data_tags.end());
      tags = perm::make_tag_set(std::move(tags));

      for (int d : domains) {
        if (!pc.allows_domain(*pub_grant, d) || !sc.allows_domain(*sub_grant, d))
          continue;
        ++st.candidate_pairs;

        for (const PatternAutomaton* pt : topic_languages(pc, cache)) {
          for (const PatternAutomaton* stp : topic_languages(sc, cache)) {
            PatternAutomaton topic0 = glob::intersect(*pt, *stp);
            if (topic0.empty_language()) continue;
            for (const PatternAutomaton* pp : partition_languages(pc, cache)) {
              for (const PatternAutomaton* sp : partition_languages(sc, cache)) {
                PatternAutomaton part0 = glob::intersect(*pp, *sp);
                if (part0.empty_language()) continue;

                // Counterexample-guided refinement over the remaining
                // (topic, partition) region.
                struct Region {
                  PatternAutomaton topics;
                  PatternAutomaton partitions;
                  std::size_t depth;
                };
                std::vector<Region> work;
                work.push_back({std::move(topic0), std::move(part0), 0});
                while (!work.empty()) {
                  Region region = std::move(work.back());
                  work.pop_back();
                  st.max_refinement_depth =
                      std::max(st.max_refinement_depth, region.depth);
                  auto topic = region.topics.witness();
                  if (!topic) continue;
                  auto partition = region.partitions.witness();
                  if (!partition) continue;

                  ActionRequest pub_act{pub_file.subject_name, d, Verb::Publish,
                                        *topic, *partition, tags};
                  ActionRequest sub_act{sub_file.subject_name, d,
                                        Verb::Subscribe, *topic, *partition,
                                        tags};
                  ++st.confirmations;
                  auto [pub_q, pub_trace] = pdp::evaluate(pub_file, pub_act, at);
                  auto [sub_q, sub_trace] = pdp::evaluate(sub_file, sub_act, at);
                  if (pub_q == Qualifier::Allow && sub_q == Qualifier::Allow)
                    return ActionPair{pub_act, sub_act};

                  // The candidate rule matches the witness by construction,
                  // so a non-ALLOW outcome names an earlier deny rule.
                  bool pub_failed = pub_q != Qualifier::Allow;
                  const auto& trace = pub_failed ? pub_trace : sub_trace;
                  const Grant& grant = pub_failed ? *pub_grant : *sub_grant;
                  Verb verb = pub_failed ? Verb::Publish : Verb::Subscribe;
                  if (trace.outcome != Qualifier::Deny || !trace.rule_index)
                    throw std::logic_error(
                        "intersection: confirmation failed without a deny rule");
                  const Rule& deny = grant.rules[*trace.rule_index];
                  const CriteriaSet* crit = deny.criteria_for(verb);
                  if (crit == nullptr)
                    throw std::logic_error(
                        "intersection: shadowing rule lacks criteria");
                  if (region.depth >= depth_bound)
                    throw std::logic_error(
                        "intersection: refinement exceeded deny-rule bound");

                  // Branch 1 removes the deny's topics; branch 2 its
                  // partitions. The witness lies in both subtracted sets, so
                  // each branch strictly shrinks.
                  st.refinement_steps += 2;
                  work.push_back({subtract_topics(region.topics, *crit, cache),
                                  region.partitions, region.depth + 1});
                  work.push_back(
                      {region.topics,
                       subtract_partitions(std::move(region.partitions), *crit,
                                           cache),
                       region.depth + 1});
                }
              }
            }
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<ActionPair> grant_intersection(const PermissionsFile& a,
                                             const PermissionsFile& b,
                                             Timestamp at, Direction direction,
                                             IntersectStats* stats) {
  if (direction == Direction::APublishesToB) return solve(a, b, at, stats);
  return solve(b, a, at, stats);
}

namespace {

std::vector<std::string> enumerate_strings(std::string_view alphabet,
                                           int max_len) {
  std::string sigma(alphabet);
  std::sort(sigma.begin(), sigma.end());
  sigma.erase(std::unique(sigma.begin(), sigma.end()), sigma.end());
  std::vector<std::string> out = {""};
  std::size_t level_start = 0;
  for (int len = 1; len <= max_len; ++len) {
    std::size_t level_end = out.size();
    for (std::size_t i = level_start; i < level_end; ++i)
      for (char c : sigma) out.push_back(out[i] + c);
    level_start = level_end;
  }
  return out;
}

int max_mentioned_domain(const PermissionsFile& f) {
  int m = -1;
  for (const Grant& g : f.grants)
    for (const Rule& r : g.rules)
      for (const auto& [lo, hi] : r.domains.entries()) m = std::max(m, hi);
  return m;
}

std::vector<perm::DataTag> declared_tags(const PermissionsFile& f) {
  std::vector<perm::DataTag> out;
  for (const Grant& g : f.grants)
    for (const Rule& r : g.rules)
      for (auto verb : {Verb::Publish, Verb::Subscribe, Verb::Relay})
        if (const CriteriaSet* c = r.criteria_for(verb))
          out.insert(out.end(), c->data_tags.begin(), c->data_tags.end());
  return out;
}

// Cheap, conservative per-topic filter: a side can only allow a topic if
// some allow rule's topic expression matches it, or the grant default is
// ALLOW.
bool topic_plausible(const Grant& g, Verb verb, const std::string& topic) {
  if (g.default_qualifier == Qualifier::Allow) return true;
  for (const Rule& r : g.rules) {
    if (r.qualifier != Qualifier::Allow) continue;
    const CriteriaSet* c = r.criteria_for(verb);
    if (c == nullptr) continue;
    for (const auto& p : c->topics)
      if (glob::fnmatch(p, topic)) return true;
  }
  return false;
}

}  // namespace

std::optional<ActionPair> brute_force_intersection(
    const PermissionsFile& a, const PermissionsFile& b, Timestamp at,
    Direction direction, std::string_view alphabet, int max_topic_len,
    int max_partition_len) {
  const PermissionsFile& pub_file =
      direction == Direction::APublishesToB ? a : b;
  const PermissionsFile& sub_file =
      direction == Direction::APublishesToB ? b : a;
  if (max_partition_len < 0) max_partition_len = max_topic_len;

  const Grant* pub_grant = first_applicable_grant(pub_file, at);
  const Grant* sub_grant = first_applicable_grant(sub_file, at);
  if (pub_grant == nullptr || sub_grant == nullptr) return std::nullopt;

  std::vector<std::string> topics = enumerate_strings(alphabet, max_topic_len);
  std::vector<std::string> partitions =
      enumerate_strings(alphabet, max_partition_len);

  std::vector<perm::DataTag> pool = declared_tags(pub_file);
  {
    auto more = declared_tags(sub_file);
    pool.insert(pool.end(), more.begin(), more.end());
  }
  pool = perm::make_tag_set(std::move(pool));
  if (pool.size() > 12)
    throw InputError("brute force: too many declared data tags (" +
                     std::to_string(pool.size()) + ")");
  std::vector<std::vector<perm::DataTag>> tag_sets;
  for (std::size_t mask = 0; mask < (std::size_t{1} << pool.size()); ++mask) {
    std::vector<perm::DataTag> set;
    for (std::size_t k = 0; k < pool.size(); ++k)
      if (mask & (std::size_t{1} << k)) set.push_back(pool[k]);
    tag_sets.push_back(std::move(set));
  }

  int max_domain =
      std::max(max_mentioned_domain(pub_file), max_mentioned_domain(sub_file));

  for (const std::string& topic : topics) {
    if (!topic_plausible(*pub_grant, Verb::Publish, topic)) continue;
    if (!topic_plausible(*sub_grant, Verb::Subscribe, topic)) continue;
    for (int d = 0; d <= max_domain + 1; ++d) {
      for (const std::string& partition : partitions) {
        for (const auto& tags : tag_sets) {
          ActionRequest pub_act{pub_file.subject_name, d, Verb::Publish, topic,
                                partition, tags};
          if (pdp::evaluate(pub_file, pub_act, at).first != Qualifier::Allow)
            continue;
          ActionRequest sub_act{sub_file.subject_name, d, Verb::Subscribe,
                                topic, partition, tags};
          if (pdp::evaluate(sub_file, sub_act, at).first != Qualifier::Allow)
            continue;
          return ActionPair{pub_act, sub_act};
        }
      }
    }
  }
  return std::nullopt;
}

EdgeResult EdgeOracle::query(const cap::ParticipantId& from,
                             const cap::ParticipantId& to, Timestamp at) {
  const cap::ParticipantInfo& pub_info = db_.at(from);
  const cap::ParticipantInfo& sub_info = db_.at(to);
  auto key = std::make_tuple(from, to, at);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      ++hits_;
      return it->second;
    }
  }
  ++invocations_;
  auto pair = grant_intersection(pub_info.permissions, sub_info.permissions, at,
                                 Direction::APublishesToB);
  EdgeResult result;
  if (pair) {
    result.status = EdgeStatus::Verified;
    result.witness = std::move(pair);
  } else {
    result.status = EdgeStatus::Refuted;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  auto [it, inserted] = cache_.emplace(key, std::move(result));
  return it->second;  // idempotent: a racing insert computed the same value
}

}  // namespace ddsrecon::isect
