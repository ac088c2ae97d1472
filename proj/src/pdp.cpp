#include "ddsrecon/pdp.hpp"

#include <algorithm>
#include <set>

#include "ddsrecon/errors.hpp"
#include "ddsrecon/glob.hpp"

namespace ddsrecon::pdp {

namespace {

using perm::ActionRequest;
using perm::CriteriaSet;
using perm::Qualifier;
using perm::Rule;
using perm::Verb;

// One fnmatch call site, with the vendor bug emulation hook. Under
// SwappedFnmatchArgs the action literal becomes the pattern; a literal that
// fails to parse as a pattern simply never matches.
bool expression_matches(const glob::GlobPattern& expression,
                        const std::string& literal, PdpVariant variant) {
  if (variant == PdpVariant::SwappedFnmatchArgs) {
    try {
      return glob::fnmatch(glob::GlobPattern(literal), expression.source());
    } catch (const ParseError&) {
      return false;
    }
  }
  return glob::fnmatch(expression, literal);
}

bool topics_match(const CriteriaSet& crit, const ActionRequest& action,
                  PdpVariant variant) {
  return std::any_of(crit.topics.begin(), crit.topics.end(),
                     [&](const glob::GlobPattern& p) {
                       return expression_matches(p, action.topic, variant);
                     });
}

bool partitions_match(const CriteriaSet& crit, const ActionRequest& action,
                      PdpVariant variant) {
  if (variant == PdpVariant::SkipPartitionCheck) return true;
  if (crit.partitions.empty()) {
    static_assert(perm::kEmptyPartitionsMeansDefault);
    return action.partition.empty();
  }
  return std::any_of(crit.partitions.begin(), crit.partitions.end(),
                     [&](const glob::GlobPattern& p) {
                       return expression_matches(p, action.partition, variant);
                     });
}

bool tags_match(const CriteriaSet& crit, const ActionRequest& action) {
  static_assert(perm::kDataTagSubsetMatching);
  return std::all_of(crit.data_tags.begin(), crit.data_tags.end(),
                     [&](const perm::DataTag& t) {
                       return std::find(action.data_tags.begin(),
                                        action.data_tags.end(),
                                        t) != action.data_tags.end();
                     });
}

bool criteria_match(const CriteriaSet& crit, const ActionRequest& action,
                    PdpVariant variant) {
  return topics_match(crit, action, variant) &&
         partitions_match(crit, action, variant) && tags_match(crit, action);
}

CriterionKind first_present_kind(const CriteriaSet& crit) {
  if (!crit.topics.empty()) return CriterionKind::Topics;
  if (!crit.partitions.empty()) return CriterionKind::Partitions;
  return CriterionKind::Tags;
}

std::optional<std::pair<std::size_t, const Rule*>> check_rules(
    const std::vector<Rule>& rules, const ActionRequest& action,
    PdpVariant variant) {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const Rule& rule = rules[i];
    if (!rule.domains.contains(action.domain_id)) continue;
    const CriteriaSet* crit = rule.criteria_for(action.verb);
    if (crit == nullptr) continue;
    if (criteria_match(*crit, action, variant)) return std::make_pair(i, &rule);
  }
  return std::nullopt;
}

}  // namespace

std::pair<Qualifier, EvaluationTrace> evaluate(const perm::PermissionsFile& file,
                                               const ActionRequest& action,
                                               Timestamp at, PdpVariant variant,
                                               GrantFallthrough fallthrough) {
  std::optional<std::size_t> fallthrough_grant;
  for (std::size_t gi = 0; gi < file.grants.size(); ++gi) {
    const perm::Grant& grant = file.grants[gi];
    if (grant.subject_name != action.subject_name) continue;
    if (!grant.validity.covers(at)) continue;
    auto matched = check_rules(grant.rules, action, variant);
    if (matched) {
      const auto& [rule_index, rule] = *matched;
      EvaluationTrace trace;
      trace.grant_index = gi;
      trace.rule_index = rule_index;
      trace.criterion_kind = first_present_kind(*rule->criteria_for(action.verb));
      trace.outcome = rule->qualifier;
      return {rule->qualifier, trace};
    }
    if (fallthrough == GrantFallthrough::ReturnDefault) {
      EvaluationTrace trace;
      trace.grant_index = gi;
      trace.outcome = grant.default_qualifier;
      return {grant.default_qualifier, trace};
    }
    if (!fallthrough_grant) fallthrough_grant = gi;
  }
  if (fallthrough_grant) {
    EvaluationTrace trace;
    trace.grant_index = fallthrough_grant;
    trace.outcome = file.grants[*fallthrough_grant].default_qualifier;
    return {trace.outcome, trace};
  }
  EvaluationTrace trace;
  trace.outcome = Qualifier::Error;
  return {Qualifier::Error, trace};
}

bool match_actions(const ActionRequest& a, const ActionRequest& b) {
  const ActionRequest* pub = nullptr;
  const ActionRequest* sub = nullptr;
  if (a.verb == Verb::Publish && b.verb == Verb::Subscribe) {
    pub = &a;
    sub = &b;
  } else if (b.verb == Verb::Publish && a.verb == Verb::Subscribe) {
    pub = &b;
    sub = &a;
  } else {
    return false;
  }
  return pub->topic == sub->topic && pub->partition == sub->partition &&
         pub->data_tags == sub->data_tags;
}

namespace {

// Candidate field values harvested from the document itself.
struct ProbeSpace {
  std::vector<int> domains;
  std::vector<std::string> topics;
  std::vector<std::string> partitions;
  std::vector<std::vector<perm::DataTag>> tag_sets;
};

void add_expression_probes(std::vector<std::string>& out,
                           const std::vector<glob::GlobPattern>& patterns) {
  for (const auto& p : patterns) {
    out.push_back(p.source());
    if (auto w = glob::compile(p).witness()) out.push_back(*w);
  }
}

ProbeSpace build_probe_space(const perm::PermissionsFile& file) {
  ProbeSpace space;
  std::set<int> domains = {0};
  std::set<std::vector<perm::DataTag>> tag_sets = {{}};
  for (const auto& grant : file.grants) {
    for (const auto& rule : grant.rules) {
      for (const auto& [lo, hi] : rule.domains.entries()) {
        domains.insert(lo);
        domains.insert(hi);
      }
      for (auto verb : {Verb::Publish, Verb::Subscribe, Verb::Relay}) {
        const CriteriaSet* crit = rule.criteria_for(verb);
        if (crit == nullptr) continue;
        add_expression_probes(space.topics, crit->topics);
        add_expression_probes(space.partitions, crit->partitions);
        if (!crit->data_tags.empty())
          tag_sets.insert(perm::make_tag_set(crit->data_tags));
      }
    }
  }
  space.topics.push_back("*");
  space.partitions.push_back("");
  space.partitions.push_back("*");
  space.domains.assign(domains.begin(), domains.end());
  space.tag_sets.assign(tag_sets.begin(), tag_sets.end());
  auto dedupe = [](std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  dedupe(space.topics);
  dedupe(space.partitions);
  return space;
}

}  // namespace

std::optional<DifferentialWitness> differential_witness(
    const perm::PermissionsFile& file, PdpVariant variant,
    std::size_t search_budget) {
  if (variant == PdpVariant::Compliant)
    throw InputError("differential search needs a non-compliant variant");

  ProbeSpace space = build_probe_space(file);
  // Probe at the midpoint of the first grant's validity so time is not the
  // discriminating factor.
  Timestamp at = file.grants.front().validity.not_before / 2 +
                 file.grants.front().validity.not_after / 2;
  std::size_t used = 0;
  for (int domain : space.domains) {
    for (auto verb : {Verb::Publish, Verb::Subscribe, Verb::Relay}) {
      for (const auto& topic : space.topics) {
        for (const auto& partition : space.partitions) {
          for (const auto& tags : space.tag_sets) {
            if (used >= search_budget) return std::nullopt;
            ++used;
            ActionRequest action;
            action.subject_name = file.subject_name;
            action.domain_id = domain;
            action.verb = verb;
            action.topic = topic;
            action.partition = partition;
            action.data_tags = tags;
            Qualifier compliant =
                evaluate(file, action, at, PdpVariant::Compliant).first;
            Qualifier variant_outcome = evaluate(file, action, at, variant).first;
            if (compliant != variant_outcome)
              return DifferentialWitness{action, compliant, variant_outcome};
          }
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace ddsrecon::pdp
