#include "ddsrecon/glob.hpp"

#include <random>
#include <set>

#include "doctest.h"

#include "ddsrecon/errors.hpp"
#include "support/strings.hpp"

using namespace ddsrecon;
using glob::GlobPattern;
using glob::PatternAutomaton;

namespace {

// Brute-force shortest witness over a small alphabet, used where the
// expected strings below were derived.
std::optional<std::string> brute_witness(const GlobPattern& a,
                                         const GlobPattern& b,
                                         std::string_view alphabet, int max_len) {
  for (const auto& s : testgen::all_strings(alphabet, max_len))
    if (glob::fnmatch(a, s) && glob::fnmatch(b, s)) return s;
  return std::nullopt;
}

}  // namespace

TEST_CASE("fnmatch basics") {
  CHECK(glob::fnmatch(GlobPattern("foo/bar/*"), "foo/bar/test"));
  CHECK_FALSE(glob::fnmatch(GlobPattern("foo/?"), "foo/ab"));
  CHECK(glob::fnmatch(GlobPattern("foo/?"), "foo/a"));
  // derived from a reference POSIX fnmatch run: fnmatch("[!a]x", "bx", 0) == 0
  CHECK(glob::fnmatch(GlobPattern("[!a]x"), "bx"));
  CHECK_FALSE(glob::fnmatch(GlobPattern("[!a]x"), "ax"));
  CHECK(glob::fnmatch(GlobPattern("[^a]x"), "bx"));
  CHECK(glob::fnmatch(GlobPattern("*"), ""));
  CHECK(glob::fnmatch(GlobPattern("a[b-d]e"), "ace"));
  CHECK_FALSE(glob::fnmatch(GlobPattern("a[b-d]e"), "aee"));
  CHECK(glob::fnmatch(GlobPattern("\\*"), "*"));
  CHECK_FALSE(glob::fnmatch(GlobPattern("\\*"), "x"));
  CHECK(glob::fnmatch(GlobPattern("[]a]"), "]"));
  CHECK(glob::fnmatch(GlobPattern("[]a]"), "a"));
  // '*' crosses the path separator in the chosen dialect
  CHECK(glob::fnmatch(GlobPattern("foo*"), "foo/bar/baz"));
}

TEST_CASE("pattern parse errors carry byte offsets") {
  CHECK_THROWS_AS(GlobPattern(""), ParseError);
  try {
    GlobPattern("ab[cd");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
  CHECK_THROWS_AS(GlobPattern("[]"), ParseError);
  CHECK_THROWS_AS(GlobPattern("a\\"), ParseError);
  try {
    GlobPattern("x[d-b]");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 3);
  }
}

TEST_CASE("compile: literal and star shapes") {
  PatternAutomaton abc = glob::compile(GlobPattern("abc"));
  CHECK(abc.accepts("abc"));
  CHECK_FALSE(abc.accepts("ab"));
  CHECK_FALSE(abc.accepts("abcd"));
  CHECK_FALSE(abc.accepts(""));

  PatternAutomaton star = glob::compile(GlobPattern("*"));
  CHECK(star.state_count() == 1);  // one accepting state, self-loop on everything
  CHECK(star.accepts(""));
  CHECK(star.accepts("anything at all / with separators"));
  CHECK(star.witness() == std::string(""));
}

TEST_CASE("compile agrees with fnmatch: a[bc]* exhaustively to length 5") {
  GlobPattern p("a[bc]*");
  PatternAutomaton dfa = glob::compile(p);
  for (const auto& s : testgen::all_strings("abc/", 5))
    CHECK(dfa.accepts(s) == glob::fnmatch(p, s));
}

TEST_CASE("intersect examples") {
  auto inter = [](const char* a, const char* b) {
    return glob::intersect(glob::compile(GlobPattern(a)),
                           glob::compile(GlobPattern(b)));
  };
  PatternAutomaton star_foo = inter("*", "foo");
  CHECK(star_foo.accepts("foo"));
  CHECK_FALSE(star_foo.accepts("fo"));
  CHECK_FALSE(star_foo.accepts("foox"));
  CHECK(star_foo.witness() == std::string("foo"));

  PatternAutomaton overlapping = inter("foo/bar/*", "foo/*/test");
  CHECK_FALSE(overlapping.empty_language());
  CHECK(overlapping.accepts("foo/bar/test"));

  CHECK(inter("a", "b").empty_language());
}

TEST_CASE("difference examples") {
  auto diff = [](const char* a, const char* b) {
    return glob::difference(glob::compile(GlobPattern(a)),
                            glob::compile(GlobPattern(b)));
  };
  CHECK(diff("*", "*").empty_language());

  PatternAutomaton d = diff("foo/*", "foo/bar");
  CHECK_FALSE(d.empty_language());
  CHECK_FALSE(d.accepts("foo/bar"));
  CHECK(d.accepts("foo/baz"));

  PatternAutomaton d2 = diff("a?", "a[b]");
  CHECK(d2.accepts("aa"));
  CHECK_FALSE(d2.accepts("ab"));
}

TEST_CASE("witness: shortest then smallest bytes, deterministic") {
  CHECK_FALSE(glob::compile(GlobPattern("a")).witness() == std::nullopt);
  CHECK(glob::intersect(glob::compile(GlobPattern("a")),
                        glob::compile(GlobPattern("b")))
            .witness() == std::nullopt);
  CHECK(glob::compile(GlobPattern("*")).witness() == std::string(""));

  PatternAutomaton inter = glob::intersect(glob::compile(GlobPattern("foo/*")),
                                           glob::compile(GlobPattern("*/test")));
  // derived by brute-force shortest-string search
  CHECK(brute_witness(GlobPattern("foo/*"), GlobPattern("*/test"), "fote/s", 8) ==
        std::string("foo/test"));
  CHECK(inter.witness() == std::string("foo/test"));

  // repeated runs yield the identical string
  for (int i = 0; i < 3; ++i) {
    PatternAutomaton again = glob::intersect(glob::compile(GlobPattern("foo/*")),
                                             glob::compile(GlobPattern("*/test")));
    CHECK(again.witness() == std::string("foo/test"));
  }

  // ties broken by byte value: the smallest byte wins, which for an
  // unconstrained position is byte 0
  auto w = glob::compile(GlobPattern("a?")).witness();
  REQUIRE(w.has_value());
  CHECK(w->size() == 2);
  CHECK((*w)[0] == 'a');
  CHECK((*w)[1] == '\0');
}

TEST_CASE("two_way_match is weaker than language intersection") {
  CHECK(glob::two_way_match(GlobPattern("foo/bar/*"), GlobPattern("foo/bar/test")));
  CHECK(glob::two_way_match(GlobPattern("a"), GlobPattern("a")));

  // the checked-in counterexample: no two-way fnmatch, non-empty intersection
  GlobPattern p("foo/*x"), q("foo/a*");
  CHECK_FALSE(glob::two_way_match(p, q));
  PatternAutomaton inter = glob::intersect(glob::compile(p), glob::compile(q));
  CHECK_FALSE(inter.empty_language());
  CHECK(inter.accepts("foo/ax"));
  CHECK(inter.witness() == std::string("foo/ax"));
}

TEST_CASE("automaton membership equals fnmatch on random patterns") {
  std::mt19937_64 rng(20240901);
  const std::string pattern_alphabet = "ab/*?[]!";
  const auto strings = testgen::all_strings("ab/", 5);
  int checked = 0;
  while (checked < 120) {
    int len = std::uniform_int_distribution<int>(1, 8)(rng);
    std::string source;
    for (int i = 0; i < len; ++i)
      source += pattern_alphabet[std::uniform_int_distribution<std::size_t>(
          0, pattern_alphabet.size() - 1)(rng)];
    std::optional<GlobPattern> p;
    try {
      p.emplace(source);
    } catch (const ParseError&) {
      continue;  // malformed sample; draw another
    }
    PatternAutomaton dfa = glob::compile(*p);
    for (const auto& s : strings) {
      bool direct = glob::fnmatch(*p, s);
      bool automaton = dfa.accepts(s);
      if (direct != automaton) {
        CAPTURE(source);
        CAPTURE(s);
        REQUIRE(direct == automaton);
      }
    }
    ++checked;
  }
}

TEST_CASE("intersection and difference agree with set operations") {
  std::mt19937_64 rng(77);
  const std::string pattern_alphabet = "ab/*?";
  const auto strings = testgen::all_strings("ab/", 5);
  for (int trial = 0; trial < 60; ++trial) {
    auto draw = [&] {
      int len = std::uniform_int_distribution<int>(1, 6)(rng);
      std::string s;
      for (int i = 0; i < len; ++i)
        s += pattern_alphabet[std::uniform_int_distribution<std::size_t>(
            0, pattern_alphabet.size() - 1)(rng)];
      return GlobPattern(s);
    };
    GlobPattern a = draw(), b = draw();
    PatternAutomaton inter = glob::intersect(glob::compile(a), glob::compile(b));
    PatternAutomaton diff = glob::difference(glob::compile(a), glob::compile(b));
    for (const auto& s : strings) {
      bool in_a = glob::fnmatch(a, s);
      bool in_b = glob::fnmatch(b, s);
      CHECK(inter.accepts(s) == (in_a && in_b));
      CHECK(diff.accepts(s) == (in_a && !in_b));
    }
    if (auto w = inter.witness()) {
      CHECK(glob::fnmatch(a, *w));
      CHECK(glob::fnmatch(b, *w));
    }
  }
}

TEST_CASE("separator-limited dialect is available for experiments") {
  glob::MatchDialect no_cross;
  no_cross.star_crosses_separator = false;
  GlobPattern p("foo*", no_cross);
  CHECK(glob::fnmatch(p, "foobar"));
  CHECK_FALSE(glob::fnmatch(p, "foo/bar"));
  GlobPattern q("foo?", no_cross);
  CHECK_FALSE(glob::fnmatch(q, "foo/"));
  CHECK(glob::compile(p).accepts("foobar"));
  CHECK_FALSE(glob::compile(p).accepts("foo/bar"));
}
