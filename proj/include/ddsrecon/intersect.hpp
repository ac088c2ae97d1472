#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string_view>
#include <tuple>

#include "ddsrecon/capture.hpp"
#include "ddsrecon/pdp.hpp"
#include "ddsrecon/permissions.hpp"

namespace ddsrecon::isect {

enum class Direction { APublishesToB, BPublishesToA };

/// A concrete matching pair: the publisher action is allowed by one file,
/// the subscriber action by the other, and the two actions match.
struct ActionPair {
  perm::ActionRequest publisher_action;
  perm::ActionRequest subscriber_action;
};

struct IntersectStats {
  std::size_t candidate_pairs = 0;    // (publish rule, subscribe rule, domain)
  std::size_t refinement_steps = 0;   // language subtractions performed
  std::size_t max_refinement_depth = 0;
  std::size_t confirmations = 0;      // ground-truth evaluate() double-checks
};

/// Decides whether some publish action allowed by the publisher-side file
/// matches some subscribe action allowed by the subscriber side at `at`, and
/// returns the first confirmed witness. The search walks candidate allow-rule
/// pairs in document order, intersects their topic and partition languages
/// with the glob algebra, and confirms every witness through evaluate();
/// a witness shadowed by an earlier deny rule triggers counterexample-guided
/// subtraction of that rule's topic language in one branch and its partition
/// language in the other. A grant default of ALLOW acts as a trailing
/// catch-all rule.
std::optional<ActionPair> grant_intersection(const perm::PermissionsFile& a,
                                             const perm::PermissionsFile& b,
                                             Timestamp at, Direction direction,
                                             IntersectStats* stats = nullptr);

/// Independent oracle: exhaustively enumerates topic and partition strings
/// over `alphabet` (lengths 0..max_topic_len / max_partition_len), action
/// domains up to the largest id mentioned by either file plus one, and tag
/// subsets drawn from both files' declared tags. Desk-scale only
/// (|alphabet| <= 4, lengths <= 6). A negative partition length means "same
/// as the topic length".
std::optional<ActionPair> brute_force_intersection(
    const perm::PermissionsFile& a, const perm::PermissionsFile& b, Timestamp at,
    Direction direction, std::string_view alphabet, int max_topic_len,
    int max_partition_len = -1);

enum class EdgeStatus { Heuristic, Verified, Refuted };

struct EdgeResult {
  EdgeStatus status = EdgeStatus::Refuted;
  std::optional<ActionPair> witness;  // present iff Verified
};

/// Decides directional connectivity between two captured participants,
/// memoizing by (from, to, at). Thread-safe: the solver runs outside the
/// lock and inserts are idempotent.
class EdgeOracle {
 public:
  explicit EdgeOracle(const cap::ParticipantDatabase& db) : db_(db) {}

  /// Edge from→to means "from" publishes something "to" may subscribe.
  EdgeResult query(const cap::ParticipantId& from, const cap::ParticipantId& to,
                   Timestamp at);

  std::size_t solver_invocations() const { return invocations_.load(); }
  std::size_t cache_hits() const { return hits_.load(); }

 private:
  const cap::ParticipantDatabase& db_;
  mutable std::mutex mutex_;
  std::map<std::tuple<cap::ParticipantId, cap::ParticipantId, Timestamp>,
           EdgeResult>
      cache_;
  std::atomic<std::size_t> invocations_{0};
  std::atomic<std::size_t> hits_{0};
};

}  // namespace ddsrecon::isect
