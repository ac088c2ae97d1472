#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ddsrecon::glob {

/// Matching dialect used for permission expressions. Secure DDS invokes plain
/// fnmatch with default flags, so '*' and '?' cross '/' and backslash escapes
/// the next character. The standard does not pin the flags vendors pass;
/// keeping the dialect explicit lets experiments flip it.
struct MatchDialect {
  bool star_crosses_separator = true;
  bool backslash_escapes = true;
};

inline constexpr MatchDialect kDefaultDialect{};

/// A set of bytes, kept as sorted disjoint inclusive ranges.
class CharClass {
 public:
  using Range = std::pair<unsigned char, unsigned char>;

  static CharClass any();
  static CharClass single(unsigned char c);

  void add(unsigned char lo, unsigned char hi);
  CharClass complemented() const;
  CharClass without(unsigned char c) const;

  bool contains(unsigned char c) const;
  bool empty() const { return ranges_.empty(); }
  const std::vector<Range>& ranges() const { return ranges_; }

  bool operator==(const CharClass&) const = default;

 private:
  void normalize();
  std::vector<Range> ranges_;
};

struct PatternItem {
  enum class Kind { Consume, Star };
  Kind kind = Kind::Consume;
  CharClass cls;  // set for Consume; for Star this is the repeatable class
};

/// A POSIX-fnmatch glob: '*', '?', bracket expressions with ranges and
/// '!'/'^' negation, backslash escapes. Parsing throws ParseError with the
/// byte offset of the offending character; empty patterns are rejected.
class GlobPattern {
 public:
  explicit GlobPattern(std::string source,
                       const MatchDialect& dialect = kDefaultDialect);

  const std::string& source() const { return source_; }
  const std::vector<PatternItem>& items() const { return items_; }
  const MatchDialect& dialect() const { return dialect_; }

  friend bool operator==(const GlobPattern& a, const GlobPattern& b) {
    return a.source_ == b.source_;
  }

 private:
  std::string source_;
  MatchDialect dialect_;
  std::vector<PatternItem> items_;
};

/// True iff `text` is in the pattern's language.
bool fnmatch(const GlobPattern& pattern, std::string_view text);

/// The fast heuristic relation: fnmatch(p, q.source) or fnmatch(q, p.source).
/// Deliberately weaker than language-intersection non-emptiness; see the
/// "foo/*x" vs "foo/a*" tests.
bool two_way_match(const GlobPattern& p, const GlobPattern& q);

/// Deterministic complete automaton over symbolic byte classes. The
/// transition function is total by construction (a sink state is added when
/// needed), so complement-style operations never enumerate 256 edges.
/// Immutable after construction and safe to share across threads.
class PatternAutomaton {
 public:
  using State = std::uint32_t;

  /// Automaton accepting exactly one string.
  static PatternAutomaton literal(std::string_view text);

  bool accepts(std::string_view text) const;
  bool empty_language() const;

  /// Shortest accepted string, ties broken by smallest byte value
  /// left-to-right; nothing when the language is empty.
  std::optional<std::string> witness() const;

  std::size_t state_count() const { return next_.size(); }
  bool complete() const { return true; }  // structural invariant

  friend PatternAutomaton intersect(const PatternAutomaton& a,
                                    const PatternAutomaton& b);
  friend PatternAutomaton difference(const PatternAutomaton& a,
                                     const PatternAutomaton& b);
  friend PatternAutomaton compile(const GlobPattern& pattern);

 private:
  PatternAutomaton() = default;
  std::size_t atom_index(unsigned char c) const;
  static PatternAutomaton product(const PatternAutomaton& a,
                                  const PatternAutomaton& b, bool negate_b);

  // atoms_ is an ascending partition of 0..255 into contiguous intervals.
  std::vector<std::pair<unsigned char, unsigned char>> atoms_;
  std::vector<std::vector<State>> next_;  // [state][atom]
  std::vector<bool> accepting_;
  State start_ = 0;
};

/// Compiles the glob to an automaton whose membership agrees with fnmatch on
/// every string.
PatternAutomaton compile(const GlobPattern& pattern);

PatternAutomaton intersect(const PatternAutomaton& a, const PatternAutomaton& b);
PatternAutomaton difference(const PatternAutomaton& a, const PatternAutomaton& b);

}  // namespace ddsrecon::glob
