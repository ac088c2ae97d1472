#include "ddsrecon/permissions.hpp"

#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"

#include "ddsrecon/errors.hpp"
#include "ddsrecon/netsim.hpp"
#include "ddsrecon/pdp.hpp"

using namespace ddsrecon;
using perm::PermissionsFile;
using perm::Qualifier;
using perm::Verb;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(DDSRECON_FIXTURE_DIR) + "/" + name);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kMinimal = R"(<?xml version="1.0" encoding="UTF-8"?>
<dds>
  <permissions>
    <grant>
      <subject_name>CN=node</subject_name>
      <validity>
        <not_before>2001-01-01T00:00:00Z</not_before>
        <not_after>2031-01-01T00:00:00Z</not_after>
      </validity>
      <allow_rule>
        <domains><id>0</id></domains>
        <publish><topics><topic>t</topic></topics></publish>
      </allow_rule>
      <default>DENY</default>
    </grant>
  </permissions>
</dds>
)";

}  // namespace

TEST_CASE("parse minimal document") {
  PermissionsFile f = perm::parse_permissions(kMinimal);
  CHECK(f.subject_name == "CN=node");
  REQUIRE(f.grants.size() == 1);
  REQUIRE(f.grants[0].rules.size() == 1);
  const perm::Rule& r = f.grants[0].rules[0];
  CHECK(r.qualifier == Qualifier::Allow);
  CHECK(r.domains.contains(0));
  CHECK_FALSE(r.domains.contains(1));
  REQUIRE(r.publish.has_value());
  CHECK(r.publish->topics.size() == 1);
  CHECK(r.publish->topics[0].source() == "t");
  CHECK_FALSE(r.subscribe.has_value());
  CHECK(f.grants[0].default_qualifier == Qualifier::Deny);
}

TEST_CASE("round trip: serialize then parse is the identity") {
  PermissionsFile f = perm::parse_permissions(kMinimal);
  std::string canonical = perm::serialize_permissions(f);
  PermissionsFile again = perm::parse_permissions(canonical);
  CHECK(again == f);
  // canonical form is a fixed point
  CHECK(perm::serialize_permissions(again) == canonical);
}

TEST_CASE("rule with both publish and subscribe criteria round-trips") {
  PermissionsFile f;
  f.subject_name = "CN=x";
  perm::Grant g;
  g.subject_name = "CN=x";
  g.validity = {sim::kValidityNotBefore, sim::kValidityNotAfter};
  perm::Rule r;
  r.qualifier = Qualifier::Allow;
  r.domains.add_id(0);
  perm::CriteriaSet pub;
  pub.topics.emplace_back("a*");
  pub.partitions.emplace_back("p");
  pub.data_tags.push_back({"k", "v"});
  perm::CriteriaSet sub;
  sub.topics.emplace_back("b");
  r.publish = pub;
  r.subscribe = sub;
  g.rules.push_back(r);
  g.default_qualifier = Qualifier::Allow;
  f.grants.push_back(g);

  PermissionsFile parsed = perm::parse_permissions(perm::serialize_permissions(f));
  CHECK(parsed == f);
  REQUIRE(parsed.grants[0].rules.size() == 1);
  CHECK(parsed.grants[0].rules[0].publish.has_value());
  CHECK(parsed.grants[0].rules[0].subscribe.has_value());
}

TEST_CASE("rule order is preserved (deny then allow)") {
  PermissionsFile f;
  f.subject_name = "CN=x";
  perm::Grant g;
  g.subject_name = "CN=x";
  g.validity = {0, 100};
  perm::Rule deny;
  deny.qualifier = Qualifier::Deny;
  deny.domains.add_id(0);
  perm::CriteriaSet dc;
  dc.topics.emplace_back("a");
  deny.publish = dc;
  perm::Rule allow;
  allow.qualifier = Qualifier::Allow;
  allow.domains.add_id(0);
  perm::CriteriaSet ac;
  ac.topics.emplace_back("*");
  allow.publish = ac;
  g.rules = {deny, allow};
  f.grants.push_back(g);

  PermissionsFile parsed = perm::parse_permissions(perm::serialize_permissions(f));
  REQUIRE(parsed.grants[0].rules.size() == 2);
  CHECK(parsed.grants[0].rules[0].qualifier == Qualifier::Deny);
  CHECK(parsed.grants[0].rules[1].qualifier == Qualifier::Allow);
}

TEST_CASE("domain range 0-5 round-trips") {
  PermissionsFile f = perm::parse_permissions(kMinimal);
  f.grants[0].rules[0].domains = {};
  f.grants[0].rules[0].domains.add_range(0, 5);
  PermissionsFile parsed = perm::parse_permissions(perm::serialize_permissions(f));
  CHECK(parsed == f);
  CHECK(parsed.grants[0].rules[0].domains.contains(5));
  CHECK_FALSE(parsed.grants[0].rules[0].domains.contains(6));
  CHECK(perm::serialize_permissions(parsed).find("<id_range>") != std::string::npos);
}

TEST_CASE("parse errors name the element path") {
  // missing <validity>
  const char* missing_validity = R"(<dds><permissions><grant>
    <subject_name>CN=n</subject_name>
    <allow_rule><domains><id>0</id></domains>
      <publish><topics><topic>t</topic></topics></publish></allow_rule>
  </grant></permissions></dds>)";
  try {
    perm::parse_permissions(missing_validity);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find("validity") != std::string::npos);
    CHECK(msg.find("grant[0]") != std::string::npos);
  }

  // unknown element
  const char* unknown = R"(<dds><permissions><grant>
    <subject_name>CN=n</subject_name>
    <validity><not_before>2001-01-01T00:00:00Z</not_before>
      <not_after>2031-01-01T00:00:00Z</not_after></validity>
    <surprise/>
  </grant></permissions></dds>)";
  CHECK_THROWS_AS(perm::parse_permissions(unknown), ParseError);

  // invalid timestamp
  const char* bad_time = R"(<dds><permissions><grant>
    <subject_name>CN=n</subject_name>
    <validity><not_before>yesterday</not_before>
      <not_after>2031-01-01T00:00:00Z</not_after></validity>
  </grant></permissions></dds>)";
  CHECK_THROWS_AS(perm::parse_permissions(bad_time), ParseError);

  // malformed topic pattern
  const char* bad_pattern = R"(<dds><permissions><grant>
    <subject_name>CN=n</subject_name>
    <validity><not_before>2001-01-01T00:00:00Z</not_before>
      <not_after>2031-01-01T00:00:00Z</not_after></validity>
    <allow_rule><domains><id>0</id></domains>
      <publish><topics><topic>a[bc</topic></topics></publish></allow_rule>
  </grant></permissions></dds>)";
  try {
    perm::parse_permissions(bad_pattern);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("pattern") != std::string::npos);
  }

  // malformed markup
  CHECK_THROWS_AS(perm::parse_permissions("<dds><permissions>"), ParseError);
  // reversed validity window
  const char* reversed = R"(<dds><permissions><grant>
    <subject_name>CN=n</subject_name>
    <validity><not_before>2031-01-01T00:00:00Z</not_before>
      <not_after>2001-01-01T00:00:00Z</not_after></validity>
  </grant></permissions></dds>)";
  CHECK_THROWS_AS(perm::parse_permissions(reversed), ParseError);
}

TEST_CASE("golden talker/listener documents parse") {
  PermissionsFile talker = perm::parse_permissions(fixture("talker_permissions.xml"));
  PermissionsFile listener =
      perm::parse_permissions(fixture("listener_permissions.xml"));
  CHECK(talker.subject_name == "CN=talker");
  CHECK(listener.subject_name == "CN=listener");
  CHECK(talker.grants[0].rules[0].publish->topics.size() == 4);
  CHECK(listener.grants[0].rules[0].subscribe->topics.size() == 3);
  // the checked-in files are in canonical form already
  CHECK(perm::serialize_permissions(talker) == fixture("talker_permissions.xml"));
}

TEST_CASE("obfuscation: structure preserved, re-obfuscation rejected") {
  PermissionsFile f = perm::parse_permissions(kMinimal);
  PermissionsFile obf = perm::obfuscate_permissions(f, "key");
  CHECK(obf.obfuscated);
  CHECK(obf.grants.size() == f.grants.size());
  CHECK(obf.grants[0].rules[0].qualifier == Qualifier::Allow);
  CHECK(obf.grants[0].rules[0].publish->topics[0].source() !=
        f.grants[0].rules[0].publish->topics[0].source());
  CHECK(obf.grants[0].validity == f.grants[0].validity);

  CHECK_THROWS_AS(perm::obfuscate_permissions(obf, "key"), InputError);
  CHECK_THROWS_AS(perm::obfuscate_permissions(f, ""), InputError);

  // marker survives serialization
  PermissionsFile reparsed = perm::parse_permissions(perm::serialize_permissions(obf));
  CHECK(reparsed.obfuscated);
  CHECK_THROWS_AS(perm::obfuscate_permissions(reparsed, "key"), InputError);
}

TEST_CASE("obfuscation preserves evaluation on literal-only files") {
  std::mt19937_64 rng(4242);
  const std::vector<std::string> topics = {"t", "u/v", "sensor"};
  const std::vector<std::string> partitions = {"", "p"};
  for (int trial = 0; trial < 40; ++trial) {
    PermissionsFile f;
    f.subject_name = "CN=n";
    perm::Grant g;
    g.subject_name = "CN=n";
    g.validity = {sim::kValidityNotBefore, sim::kValidityNotAfter};
    int rules = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < rules; ++i) {
      perm::Rule r;
      r.qualifier = std::uniform_int_distribution<int>(0, 1)(rng)
                        ? Qualifier::Allow
                        : Qualifier::Deny;
      r.domains.add_id(0);
      perm::CriteriaSet crit;
      crit.topics.emplace_back(topics[std::uniform_int_distribution<std::size_t>(
          0, topics.size() - 1)(rng)]);
      if (std::uniform_int_distribution<int>(0, 1)(rng))
        crit.partitions.emplace_back("p");
      if (std::uniform_int_distribution<int>(0, 2)(rng) == 0)
        crit.data_tags.push_back({"k", "v"});
      r.publish = crit;
      g.rules.push_back(r);
    }
    g.default_qualifier = Qualifier::Deny;
    f.grants.push_back(g);
    PermissionsFile obf = perm::obfuscate_permissions(f, "shared-key");

    for (const auto& topic : topics) {
      for (const auto& partition : partitions) {
        for (bool tagged : {false, true}) {
          perm::ActionRequest act;
          act.subject_name = "CN=n";
          act.verb = Verb::Publish;
          act.topic = topic;
          act.partition = partition;
          if (tagged) act.data_tags = {{"k", "v"}};
          auto plain = pdp::evaluate(f, act, sim::kScenarioEvalTime).first;
          auto digested = pdp::evaluate(
              obf, perm::obfuscate_action(act, "shared-key"),
              sim::kScenarioEvalTime).first;
          CHECK(plain == digested);
        }
      }
    }
  }
}

TEST_CASE("obfuscation loses wildcard semantics by construction") {
  PermissionsFile f = perm::parse_permissions(kMinimal);
  f.grants[0].rules[0].publish->topics = {glob::GlobPattern("foo/*")};
  PermissionsFile obf = perm::obfuscate_permissions(f, "key");

  perm::ActionRequest act;
  act.subject_name = "CN=node";
  act.verb = Verb::Publish;
  act.topic = "foo/bar";
  // matched in the clear...
  CHECK(pdp::evaluate(f, act, sim::kScenarioEvalTime).first == Qualifier::Allow);
  // ...but the digested action cannot match the digested expression
  CHECK(pdp::evaluate(obf, perm::obfuscate_action(act, "key"),
                      sim::kScenarioEvalTime).first == Qualifier::Deny);
}
