#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ddsrecon/glob.hpp"
#include "ddsrecon/timeutil.hpp"

namespace ddsrecon::perm {

/// Matching semantics the standard leaves open; kept as named constants so
/// experiments can flip them in one place.
/// An empty <partitions> section constrains the criterion to the default
/// partition "".
inline constexpr bool kEmptyPartitionsMeansDefault = true;
/// A criterion's tag list matches an action iff every (name, value) pair in
/// the criterion appears in the action's tag set.
inline constexpr bool kDataTagSubsetMatching = true;

enum class Qualifier { Allow, Deny, Error };  // Error is an outcome only
enum class Verb { Publish, Subscribe, Relay };

std::string_view to_string(Qualifier q);
std::string_view to_string(Verb v);

struct DataTag {
  std::string name;
  std::string value;
  auto operator<=>(const DataTag&) const = default;
};

/// Sorted, de-duplicated tag set for action requests.
std::vector<DataTag> make_tag_set(std::vector<DataTag> tags);

/// Set of non-negative domain ids, kept in document order as inclusive
/// intervals (a single id is the interval [id, id]).
class DomainSet {
 public:
  void add_id(int id) { entries_.emplace_back(id, id); }
  void add_range(int lo, int hi) { entries_.emplace_back(lo, hi); }
  bool contains(int id) const;
  bool empty() const { return entries_.empty(); }
  const std::vector<std::pair<int, int>>& entries() const { return entries_; }
  bool operator==(const DomainSet&) const = default;

 private:
  std::vector<std::pair<int, int>> entries_;
};

struct CriteriaSet {
  std::vector<glob::GlobPattern> topics;      // non-empty
  std::vector<glob::GlobPattern> partitions;  // empty = default partition ""
  std::vector<DataTag> data_tags;             // document order

  bool operator==(const CriteriaSet&) const = default;
};

struct Rule {
  Qualifier qualifier = Qualifier::Deny;  // Allow or Deny
  DomainSet domains;
  std::optional<CriteriaSet> publish;
  std::optional<CriteriaSet> subscribe;
  std::optional<CriteriaSet> relay;

  const CriteriaSet* criteria_for(Verb v) const;
  bool operator==(const Rule&) const = default;
};

struct Validity {
  Timestamp not_before = 0;
  Timestamp not_after = 0;
  bool covers(Timestamp at) const { return not_before <= at && at <= not_after; }
  bool operator==(const Validity&) const = default;
};

struct Grant {
  std::string subject_name;
  Validity validity;
  std::vector<Rule> rules;  // document order is the evaluation order
  Qualifier default_qualifier = Qualifier::Deny;

  bool operator==(const Grant&) const = default;
};

struct PermissionsFile {
  std::string subject_name;  // subject of the first grant
  std::vector<Grant> grants;
  bool obfuscated = false;

  bool operator==(const PermissionsFile&) const = default;
};

/// One concrete access attempt. The topic and partition are literal strings;
/// pattern semantics live only on the permission side.
struct ActionRequest {
  std::string subject_name;
  int domain_id = 0;
  Verb verb = Verb::Publish;
  std::string topic;
  std::string partition;           // "" is the default partition
  std::vector<DataTag> data_tags;  // sorted unique (see make_tag_set)

  bool operator==(const ActionRequest&) const = default;
};

/// Parses a permission document (UTF-8 XML, element vocabulary in
/// docs/formats.md). Grant and rule order is preserved; unknown elements are
/// rejected. Errors name the element path and byte offset.
PermissionsFile parse_permissions(std::string_view document);

/// Canonical serialization: fixed element ordering and indentation,
/// ISO-8601 UTC timestamps. parse(serialize(f)) == f.
std::string serialize_permissions(const PermissionsFile& file);

/// Replaces every topic/partition expression and data-tag value with the
/// base64 HMAC-SHA256 digest of its text (exact-string mode: wildcard
/// expansion does not survive the transform). Structure, ordering,
/// qualifiers, domains and validity are unchanged. Re-obfuscating an already
/// obfuscated file is an error.
PermissionsFile obfuscate_permissions(const PermissionsFile& file,
                                      std::string_view key);

/// Digests an action's literal fields with the same key so it can be
/// evaluated against an obfuscated file. The default partition "" stays "".
ActionRequest obfuscate_action(const ActionRequest& action, std::string_view key);

std::string obfuscation_digest(std::string_view key, std::string_view text);

}  // namespace ddsrecon::perm
