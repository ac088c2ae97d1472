#include "ddsrecon/intersect.hpp"

#include <random>

#include "doctest.h"

#include "ddsrecon/errors.hpp"
#include "ddsrecon/netsim.hpp"
#include "ddsrecon/pdp.hpp"
#include "support/generators.hpp"

using namespace ddsrecon;
using isect::ActionPair;
using isect::Direction;
using perm::PermissionsFile;
using perm::Qualifier;
using perm::Verb;

namespace {

constexpr Timestamp kAt = sim::kScenarioEvalTime;

PermissionsFile file_with_rules(const std::string& subject,
                                std::vector<perm::Rule> rules,
                                Qualifier dflt = Qualifier::Deny) {
  PermissionsFile f;
  f.subject_name = subject;
  perm::Grant g;
  g.subject_name = subject;
  g.validity = {sim::kValidityNotBefore, sim::kValidityNotAfter};
  g.rules = std::move(rules);
  g.default_qualifier = dflt;
  f.grants.push_back(std::move(g));
  return f;
}

perm::Rule rule(Qualifier q, Verb verb, std::vector<std::string> topics,
                std::vector<std::string> partitions = {},
                std::vector<perm::DataTag> tags = {}) {
  perm::Rule r;
  r.qualifier = q;
  r.domains.add_id(0);
  perm::CriteriaSet crit;
  for (auto& t : topics) crit.topics.emplace_back(t);
  for (auto& p : partitions) crit.partitions.emplace_back(p);
  crit.data_tags = std::move(tags);
  switch (verb) {
    case Verb::Publish: r.publish = std::move(crit); break;
    case Verb::Subscribe: r.subscribe = std::move(crit); break;
    case Verb::Relay: r.relay = std::move(crit); break;
  }
  return r;
}

void check_pair_valid(const ActionPair& pair, const PermissionsFile& pub_file,
                      const PermissionsFile& sub_file) {
  CHECK(pdp::match_actions(pair.publisher_action, pair.subscriber_action));
  CHECK(pdp::evaluate(pub_file, pair.publisher_action, kAt).first ==
        Qualifier::Allow);
  CHECK(pdp::evaluate(sub_file, pair.subscriber_action, kAt).first ==
        Qualifier::Allow);
}

}  // namespace

TEST_CASE("grant_intersection: overlapping chatter permissions") {
  auto a = file_with_rules("CN=a", {rule(Qualifier::Allow, Verb::Publish, {"chatter*"})});
  auto b = file_with_rules("CN=b", {rule(Qualifier::Allow, Verb::Subscribe, {"chatter"})});
  auto pair = isect::grant_intersection(a, b, kAt, Direction::APublishesToB);
  REQUIRE(pair.has_value());
  CHECK(pair->publisher_action.topic == "chatter");
  CHECK(pair->publisher_action.partition == "");
  check_pair_valid(*pair, a, b);

  // no subscribe capability on a, so the reverse direction is unsatisfiable
  CHECK_FALSE(isect::grant_intersection(a, b, kAt, Direction::BPublishesToA)
                  .has_value());
}

TEST_CASE("grant_intersection: disjoint namespaces refute") {
  auto a = file_with_rules("CN=a", {rule(Qualifier::Allow, Verb::Publish, {"a/*"})});
  auto b = file_with_rules("CN=b", {rule(Qualifier::Allow, Verb::Subscribe, {"b/*"})});
  CHECK_FALSE(isect::grant_intersection(a, b, kAt, Direction::APublishesToB)
                  .has_value());
}

TEST_CASE("grant_intersection: deny shadowing forces refinement") {
  auto a = file_with_rules(
      "CN=a", {rule(Qualifier::Deny, Verb::Publish, {"foo/secret*"}),
               rule(Qualifier::Allow, Verb::Publish, {"foo/*"})});
  auto b = file_with_rules("CN=b",
                           {rule(Qualifier::Allow, Verb::Subscribe, {"foo/secret1"})});
  CHECK_FALSE(isect::grant_intersection(a, b, kAt, Direction::APublishesToB)
                  .has_value());

  // a subscriber with room outside the denied prefix gets a witness
  auto b2 = file_with_rules("CN=b", {rule(Qualifier::Allow, Verb::Subscribe, {"foo/*"})});
  isect::IntersectStats stats;
  auto pair =
      isect::grant_intersection(a, b2, kAt, Direction::APublishesToB, &stats);
  REQUIRE(pair.has_value());
  check_pair_valid(*pair, a, b2);
  CHECK(pair->publisher_action.topic.rfind("foo/secret", 0) != 0);
  CHECK(stats.refinement_steps > 0);
  CHECK(stats.max_refinement_depth <= 1);  // one deny rule in play
}

TEST_CASE("grant_intersection: default ALLOW grants with no rules") {
  auto a = file_with_rules("CN=a", {}, Qualifier::Allow);
  auto b = file_with_rules("CN=b", {}, Qualifier::Allow);
  auto pair = isect::grant_intersection(a, b, kAt, Direction::APublishesToB);
  REQUIRE(pair.has_value());
  CHECK(pair->publisher_action.topic == "");  // shortest witness of Σ*
  check_pair_valid(*pair, a, b);
}

TEST_CASE("grant_intersection: partition-compartment interplay") {
  // Publisher may use topic t in partitions x and y, but an earlier deny
  // blocks (t, x); the subscriber only listens in x and y.
  auto a = file_with_rules(
      "CN=a", {rule(Qualifier::Deny, Verb::Publish, {"t"}, {"x"}),
               rule(Qualifier::Allow, Verb::Publish, {"t"}, {"x", "y"})});
  auto b = file_with_rules(
      "CN=b", {rule(Qualifier::Allow, Verb::Subscribe, {"t"}, {"x", "y"})});
  auto pair = isect::grant_intersection(a, b, kAt, Direction::APublishesToB);
  REQUIRE(pair.has_value());
  CHECK(pair->publisher_action.partition == "y");
  check_pair_valid(*pair, a, b);

  // both-dimension branching: the only surviving combination is (t, y)
  // even though the deny matches the lexicographically first witness (t, x)
  auto b_x_only = file_with_rules(
      "CN=b", {rule(Qualifier::Allow, Verb::Subscribe, {"t"}, {"x"})});
  CHECK_FALSE(isect::grant_intersection(a, b_x_only, kAt,
                                        Direction::APublishesToB).has_value());
}

TEST_CASE("grant_intersection: domains must overlap") {
  perm::Rule pub = rule(Qualifier::Allow, Verb::Publish, {"t"});
  pub.domains = {};
  pub.domains.add_range(0, 3);
  perm::Rule sub = rule(Qualifier::Allow, Verb::Subscribe, {"t"});
  sub.domains = {};
  sub.domains.add_id(7);
  auto a = file_with_rules("CN=a", {pub});
  auto b = file_with_rules("CN=b", {sub});
  CHECK_FALSE(isect::grant_intersection(a, b, kAt, Direction::APublishesToB)
                  .has_value());

  // widen the subscriber's domain into the overlap
  perm::Rule sub2 = rule(Qualifier::Allow, Verb::Subscribe, {"t"});
  sub2.domains = {};
  sub2.domains.add_range(2, 9);
  auto b2 = file_with_rules("CN=b", {sub2});
  auto pair = isect::grant_intersection(a, b2, kAt, Direction::APublishesToB);
  REQUIRE(pair.has_value());
  CHECK(pair->publisher_action.domain_id == 2);
  check_pair_valid(*pair, a, b2);
}

TEST_CASE("grant_intersection: per-domain deny shadowing") {
  // deny only covers domain 0; the satisfiable witness lives in domain 1
  perm::Rule deny = rule(Qualifier::Deny, Verb::Publish, {"*"});
  deny.domains = {};
  deny.domains.add_id(0);
  perm::Rule allow = rule(Qualifier::Allow, Verb::Publish, {"t"});
  allow.domains = {};
  allow.domains.add_range(0, 4);
  perm::Rule sub = rule(Qualifier::Allow, Verb::Subscribe, {"t"});
  sub.domains = {};
  sub.domains.add_range(0, 4);
  auto a = file_with_rules("CN=a", {deny, allow});
  auto b = file_with_rules("CN=b", {sub});
  auto pair = isect::grant_intersection(a, b, kAt, Direction::APublishesToB);
  REQUIRE(pair.has_value());
  CHECK(pair->publisher_action.domain_id == 1);
  check_pair_valid(*pair, a, b);
}

TEST_CASE("grant_intersection matches brute force on random file pairs") {
  std::mt19937_64 rng(31337);
  int satisfiable = 0;
  for (int trial = 0; trial < 150; ++trial) {
    PermissionsFile a = testgen::random_file(rng, "CN=a");
    PermissionsFile b = testgen::random_file(rng, "CN=b");
    auto exact = isect::grant_intersection(a, b, kAt, Direction::APublishesToB);
    // 'z' appears in no generated pattern, so it stands in for every byte
    // outside the pattern literals
    auto brute =
        isect::brute_force_intersection(a, b, kAt, Direction::APublishesToB,
                                        "ab/z", 6, 2);
    CAPTURE(perm::serialize_permissions(a));
    CAPTURE(perm::serialize_permissions(b));
    REQUIRE(exact.has_value() == brute.has_value());
    if (exact) {
      check_pair_valid(*exact, a, b);
      ++satisfiable;
    }
  }
  CHECK(satisfiable > 10);  // the generator must exercise both verdicts
}

TEST_CASE("direction swap equals role swap") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 40; ++trial) {
    PermissionsFile a = testgen::random_file(rng, "CN=a", 1, 3);
    PermissionsFile b = testgen::random_file(rng, "CN=b", 1, 3);
    auto forward = isect::grant_intersection(a, b, kAt, Direction::BPublishesToA);
    auto swapped = isect::grant_intersection(b, a, kAt, Direction::APublishesToB);
    REQUIRE(forward.has_value() == swapped.has_value());
    if (forward) {
      CHECK(forward->publisher_action == swapped->publisher_action);
      CHECK(forward->subscriber_action == swapped->subscriber_action);
    }
  }
}

TEST_CASE("brute force: default deny with empty rules") {
  auto a = file_with_rules("CN=a", {});
  auto b = file_with_rules("CN=b", {rule(Qualifier::Allow, Verb::Subscribe, {"*"})});
  CHECK_FALSE(isect::brute_force_intersection(a, b, kAt,
                                              Direction::APublishesToB, "ab/", 3)
                  .has_value());
}

TEST_CASE("edge oracle: caching and unknown participants") {
  auto talker = file_with_rules("CN=t", {rule(Qualifier::Allow, Verb::Publish,
                                              {"chatter"})});
  auto listener = file_with_rules(
      "CN=l", {rule(Qualifier::Allow, Verb::Subscribe, {"chatter"})});

  cap::ParticipantDatabase db;
  std::vector<cap::CaptureRecord> records;
  cap::CaptureRecord r1;
  r1.timestamp = kAt;
  r1.source_address = "10.0.0.1:7400";
  r1.destination_address = "239.255.0.1:7400";
  r1.participant_guid = std::string(32, '1');
  r1.subject_name = "CN=t";
  r1.permissions_document = perm::serialize_permissions(talker);
  cap::CaptureRecord r2 = r1;
  r2.participant_guid = std::string(32, '2');
  r2.subject_name = "CN=l";
  r2.permissions_document = perm::serialize_permissions(listener);
  records = {r1, r2};
  cap::load_capture(records, db);

  isect::EdgeOracle oracle(db);
  auto res = oracle.query(std::string(32, '1'), std::string(32, '2'), kAt);
  CHECK(res.status == isect::EdgeStatus::Verified);
  REQUIRE(res.witness.has_value());
  CHECK(res.witness->publisher_action.topic == "chatter");
  CHECK(oracle.solver_invocations() == 1);

  // a repeat answers from the cache with the identical result
  auto res2 = oracle.query(std::string(32, '1'), std::string(32, '2'), kAt);
  CHECK(res2.status == isect::EdgeStatus::Verified);
  CHECK(oracle.solver_invocations() == 1);
  CHECK(oracle.cache_hits() == 1);

  // reverse direction: the listener has no publish criteria
  auto rev = oracle.query(std::string(32, '2'), std::string(32, '1'), kAt);
  CHECK(rev.status == isect::EdgeStatus::Refuted);

  CHECK_THROWS_AS(oracle.query("ffffffffffffffffffffffffffffffff",
                               std::string(32, '2'), kAt),
                  InputError);
}

TEST_CASE("refinement depth never exceeds the deny-rule budget") {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 60; ++trial) {
    PermissionsFile a = testgen::random_file(rng, "CN=a", 1, 4);
    PermissionsFile b = testgen::random_file(rng, "CN=b", 1, 4);
    std::size_t denies = 0;
    for (const auto& g : {a.grants.front(), b.grants.front()})
      for (const auto& r : g.rules)
        if (r.qualifier == Qualifier::Deny) ++denies;
    isect::IntersectStats stats;
    isect::grant_intersection(a, b, kAt, Direction::APublishesToB, &stats);
    CHECK(stats.max_refinement_depth <= denies);
  }
}
