#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "ddsrecon/permissions.hpp"
#include "ddsrecon/timeutil.hpp"

namespace ddsrecon::pdp {

/// Emulated implementations for differential testing. SwappedFnmatchArgs
/// passes the action's literal as the pattern and the rule's expression as
/// the text at every fnmatch call site; SkipPartitionCheck treats the
/// partition criterion as always matching.
enum class PdpVariant { Compliant, SwappedFnmatchArgs, SkipPartitionCheck };

/// What to do when the first matching valid grant's rules all fall through.
/// The default access-control logic returns that grant's default; vendor
/// behaviour for multi-grant documents is unspecified, so the alternative is
/// selectable for experiments.
enum class GrantFallthrough { ReturnDefault, TryLaterGrants };

enum class CriterionKind { Topics, Partitions, Tags };

struct EvaluationTrace {
  std::optional<std::size_t> grant_index;
  std::optional<std::size_t> rule_index;
  // For a matched rule: the first criterion kind present on it (audit info).
  std::optional<CriterionKind> criterion_kind;
  perm::Qualifier outcome = perm::Qualifier::Error;
};

/// The access-control decision: first grant whose subject name equals the
/// action's and whose validity covers `at`; within it, rules in document
/// order, first rule whose domain set contains the action's domain and whose
/// criteria for the action's verb match decides; otherwise the grant
/// default; ERROR when no grant applies.
std::pair<perm::Qualifier, EvaluationTrace> evaluate(
    const perm::PermissionsFile& file, const perm::ActionRequest& action,
    Timestamp at, PdpVariant variant = PdpVariant::Compliant,
    GrantFallthrough fallthrough = GrantFallthrough::ReturnDefault);

/// True iff one action publishes and the other subscribes the same topic,
/// partition and data-tag set, in either orientation. Relay actions never
/// match (they are decomposed into publish+subscribe upstream).
bool match_actions(const perm::ActionRequest& a, const perm::ActionRequest& b);

struct DifferentialWitness {
  perm::ActionRequest action;
  perm::Qualifier compliant_outcome;
  perm::Qualifier variant_outcome;
};

/// Searches for an action where the compliant decision and the variant's
/// disagree, probing actions built from the file's own expressions, their
/// shortest matching strings, and wildcard literals. `search_budget` bounds
/// the number of evaluation pairs. Throws InputError when `variant` is
/// Compliant.
std::optional<DifferentialWitness> differential_witness(
    const perm::PermissionsFile& file, PdpVariant variant,
    std::size_t search_budget = 10000);

}  // namespace ddsrecon::pdp
