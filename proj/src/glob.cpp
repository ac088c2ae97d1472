#include "ddsrecon/glob.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "ddsrecon/errors.hpp"

namespace ddsrecon::glob {

// ---------------------------------------------------------------------------
// CharClass

CharClass CharClass::any() {
  CharClass c;
  c.ranges_.emplace_back(0, 255);
  return c;
}

CharClass CharClass::single(unsigned char ch) {
  CharClass c;
  c.ranges_.emplace_back(ch, ch);
  return c;
}

void CharClass::add(unsigned char lo, unsigned char hi) {
  ranges_.emplace_back(lo, hi);
  normalize();
}

void CharClass::normalize() {
  std::sort(ranges_.begin(), ranges_.end());
  std::vector<Range> merged;
  for (const auto& r : ranges_) {
    bool joinable = !merged.empty() &&
                    (r.first <= merged.back().second ||
                     (merged.back().second < 255 &&
                      r.first == merged.back().second + 1));
    if (joinable)
      merged.back().second = std::max(merged.back().second, r.second);
    else
      merged.push_back(r);
  }
  ranges_ = std::move(merged);
}

CharClass CharClass::complemented() const {
  CharClass out;
  int cursor = 0;
  for (const auto& [lo, hi] : ranges_) {
    if (cursor < lo) out.ranges_.emplace_back(cursor, lo - 1);
    cursor = hi + 1;
  }
  if (cursor <= 255) out.ranges_.emplace_back(cursor, 255);
  return out;
}

CharClass CharClass::without(unsigned char c) const {
  CharClass out;
  for (const auto& [lo, hi] : ranges_) {
    if (c < lo || c > hi) {
      out.ranges_.emplace_back(lo, hi);
      continue;
    }
    if (lo < c) out.ranges_.emplace_back(lo, c - 1);
    if (c < hi) out.ranges_.emplace_back(c + 1, hi);
  }
  return out;
}

bool CharClass::contains(unsigned char c) const {
  for (const auto& [lo, hi] : ranges_)
    if (c >= lo && c <= hi) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Pattern parsing

namespace {

constexpr unsigned char kSeparator = '/';

// Parses one bracket expression starting at `i` (which points at '[').
// Returns the class and advances `i` past the closing ']'.
CharClass parse_bracket(const std::string& s, std::size_t& i,
                        const MatchDialect& dialect) {
  const std::size_t open = i;
  ++i;
  bool negate = false;
  if (i < s.size() && (s[i] == '!' || s[i] == '^')) {
    negate = true;
    ++i;
  }
  CharClass cls;
  bool first = true;
  auto next_member = [&](std::size_t& pos) -> unsigned char {
    if (dialect.backslash_escapes && s[pos] == '\\') {
      if (pos + 1 >= s.size())
        throw ParseError("dangling escape in bracket expression", pos);
      ++pos;
    }
    return static_cast<unsigned char>(s[pos]);
  };
  while (true) {
    if (i >= s.size())
      throw ParseError("unterminated bracket expression", open);
    if (s[i] == ']' && !first) {
      ++i;
      break;
    }
    first = false;
    unsigned char lo = next_member(i);
    // A '-' between two members denotes a byte-value range; at either end it
    // is a literal.
    if (i + 1 < s.size() && s[i + 1] == '-' && i + 2 < s.size() &&
        s[i + 2] != ']') {
      std::size_t dash = i + 1;
      i += 2;
      unsigned char hi = next_member(i);
      if (lo > hi) throw ParseError("reversed range in bracket expression", dash);
      cls.add(lo, hi);
    } else {
      cls.add(lo, lo);
    }
    ++i;
  }
  if (negate) cls = cls.complemented();
  if (!dialect.star_crosses_separator) cls = cls.without(kSeparator);
  return cls;
}

}  // namespace

GlobPattern::GlobPattern(std::string source, const MatchDialect& dialect)
    : source_(std::move(source)), dialect_(dialect) {
  if (source_.empty()) throw ParseError("empty pattern", 0);
  const std::string& s = source_;
  for (std::size_t i = 0; i < s.size();) {
    char c = s[i];
    if (c == '*') {
      // Collapse runs of stars; the language is unchanged.
      if (items_.empty() || items_.back().kind != PatternItem::Kind::Star) {
        CharClass cls = CharClass::any();
        if (!dialect.star_crosses_separator) cls = cls.without(kSeparator);
        items_.push_back({PatternItem::Kind::Star, cls});
      }
      ++i;
    } else if (c == '?') {
      CharClass cls = CharClass::any();
      if (!dialect.star_crosses_separator) cls = cls.without(kSeparator);
      items_.push_back({PatternItem::Kind::Consume, cls});
      ++i;
    } else if (c == '[') {
      items_.push_back({PatternItem::Kind::Consume, parse_bracket(s, i, dialect)});
    } else if (c == '\\' && dialect.backslash_escapes) {
      if (i + 1 >= s.size()) throw ParseError("dangling escape", i);
      items_.push_back(
          {PatternItem::Kind::Consume,
           CharClass::single(static_cast<unsigned char>(s[i + 1]))});
      i += 2;
    } else {
      items_.push_back(
          {PatternItem::Kind::Consume, CharClass::single(static_cast<unsigned char>(c))});
      ++i;
    }
  }
}

// ---------------------------------------------------------------------------
// Direct matcher
//
// Iterative backtracking over the most recent star; linear for the common
// case (https://research.swtch.com/glob).

bool fnmatch(const GlobPattern& pattern, std::string_view text) {
  const auto& items = pattern.items();
  const std::size_t npos = static_cast<std::size_t>(-1);
  std::size_t pi = 0, si = 0;
  std::size_t star_pi = npos, star_si = 0;
  while (si < text.size()) {
    if (pi < items.size()) {
      const PatternItem& it = items[pi];
      if (it.kind == PatternItem::Kind::Star) {
        star_pi = pi++;
        star_si = si;
        continue;
      }
      if (it.cls.contains(static_cast<unsigned char>(text[si]))) {
        ++pi;
        ++si;
        continue;
      }
    }
    if (star_pi == npos) return false;
    if (!items[star_pi].cls.contains(static_cast<unsigned char>(text[star_si])))
      return false;  // star may not absorb this byte (separator-limited dialect)
    pi = star_pi + 1;
    si = ++star_si;
  }
  while (pi < items.size() && items[pi].kind == PatternItem::Kind::Star) ++pi;
  return pi == items.size();
}

bool two_way_match(const GlobPattern& p, const GlobPattern& q) {
  return fnmatch(p, q.source()) || fnmatch(q, p.source());
}

// ---------------------------------------------------------------------------
// Automaton construction

namespace {

using Interval = std::pair<unsigned char, unsigned char>;

// Builds the coarsest partition of 0..255 refining every class boundary.
std::vector<Interval> make_atoms(const std::vector<const CharClass*>& classes) {
  std::vector<int> cuts = {0, 256};
  for (const CharClass* cls : classes) {
    for (const auto& [lo, hi] : cls->ranges()) {
      cuts.push_back(lo);
      cuts.push_back(hi + 1);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Interval> atoms;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    atoms.emplace_back(static_cast<unsigned char>(cuts[i]),
                       static_cast<unsigned char>(cuts[i + 1] - 1));
  return atoms;
}

std::vector<Interval> merge_atoms(const std::vector<Interval>& a,
                                  const std::vector<Interval>& b) {
  std::vector<int> cuts = {0, 256};
  for (const auto& [lo, hi] : a) {
    cuts.push_back(lo);
    cuts.push_back(hi + 1);
  }
  for (const auto& [lo, hi] : b) {
    cuts.push_back(lo);
    cuts.push_back(hi + 1);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Interval> atoms;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    atoms.emplace_back(static_cast<unsigned char>(cuts[i]),
                       static_cast<unsigned char>(cuts[i + 1] - 1));
  return atoms;
}

// Maps each merged atom to the index of the containing atom of `coarse`.
std::vector<std::size_t> atom_mapping(const std::vector<Interval>& merged,
                                      const std::vector<Interval>& coarse) {
  std::vector<std::size_t> idx(merged.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    while (coarse[j].second < merged[i].first) ++j;
    idx[i] = j;
  }
  return idx;
}

}  // namespace

std::size_t PatternAutomaton::atom_index(unsigned char c) const {
  // atoms_ is sorted and covers 0..255
  std::size_t lo = 0, hi = atoms_.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (atoms_[mid].second < c)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

PatternAutomaton compile(const GlobPattern& pattern) {
  const auto& items = pattern.items();
  const std::size_t n = items.size();

  std::vector<const CharClass*> classes;
  classes.reserve(n);
  for (const auto& it : items) classes.push_back(&it.cls);

  PatternAutomaton dfa;
  dfa.atoms_ = make_atoms(classes);
  const std::size_t natoms = dfa.atoms_.size();

  // NFA positions 0..n; star at position i self-loops and epsilon-skips to
  // i+1; position n is the single accepting position.
  auto closure = [&](std::vector<std::uint32_t> set) {
    for (std::size_t k = 0; k < set.size(); ++k) {
      std::uint32_t p = set[k];
      while (p < n && items[p].kind == PatternItem::Kind::Star) {
        ++p;
        if (std::find(set.begin(), set.end(), p) == set.end()) set.push_back(p);
      }
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
  };

  std::map<std::vector<std::uint32_t>, PatternAutomaton::State> ids;
  std::vector<std::vector<std::uint32_t>> sets;
  auto intern = [&](std::vector<std::uint32_t> set) {
    auto [it, inserted] = ids.emplace(std::move(set),
                                      static_cast<PatternAutomaton::State>(sets.size()));
    if (inserted) {
      sets.push_back(it->first);
      dfa.next_.emplace_back(natoms, 0);
      dfa.accepting_.push_back(!it->first.empty() && it->first.back() == n);
    }
    return it->second;
  };

  // The empty position set is the sink; it interns itself on first use, so
  // the transition function stays total without a dead state on automata
  // that never reject.
  dfa.start_ = intern(closure({0}));

  for (std::size_t s = 0; s < sets.size(); ++s) {
    for (std::size_t a = 0; a < natoms; ++a) {
      unsigned char probe = dfa.atoms_[a].first;
      std::vector<std::uint32_t> target;
      for (std::uint32_t p : sets[s]) {
        if (p >= n) continue;
        const PatternItem& it = items[p];
        if (!it.cls.contains(probe)) continue;
        target.push_back(it.kind == PatternItem::Kind::Star ? p : p + 1);
      }
      dfa.next_[s][a] = intern(closure(std::move(target)));
    }
  }
  return dfa;
}

PatternAutomaton PatternAutomaton::literal(std::string_view text) {
  PatternAutomaton dfa;
  std::vector<const CharClass*> classes;
  std::vector<CharClass> owned;
  owned.reserve(text.size());
  for (unsigned char c : text) owned.push_back(CharClass::single(c));
  for (const auto& c : owned) classes.push_back(&c);
  dfa.atoms_ = make_atoms(classes);
  const std::size_t natoms = dfa.atoms_.size();

  // State 0 = sink, states 1..len+1 form the chain.
  const std::size_t chain = text.size() + 1;
  dfa.next_.assign(chain + 1, std::vector<State>(natoms, 0));
  dfa.accepting_.assign(chain + 1, false);
  dfa.accepting_[chain] = true;
  dfa.start_ = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    std::size_t a = dfa.atom_index(static_cast<unsigned char>(text[i]));
    dfa.next_[1 + i][a] = static_cast<State>(2 + i);
  }
  return dfa;
}

bool PatternAutomaton::accepts(std::string_view text) const {
  State s = start_;
  for (unsigned char c : text) s = next_[s][atom_index(c)];
  return accepting_[s];
}

bool PatternAutomaton::empty_language() const { return !witness().has_value(); }

std::optional<std::string> PatternAutomaton::witness() const {
  // BFS expanding atoms in ascending byte order discovers each state through
  // its (length, byte-lexicographic) minimal string; the first accepting
  // state found yields the canonical witness.
  std::vector<std::pair<State, unsigned char>> parent(next_.size(),
                                                      {0, 0});
  std::vector<char> seen(next_.size(), 0);
  std::deque<State> queue;
  seen[start_] = 1;
  if (accepting_[start_]) return std::string();
  queue.push_back(start_);
  while (!queue.empty()) {
    State s = queue.front();
    queue.pop_front();
    for (std::size_t a = 0; a < atoms_.size(); ++a) {
      State t = next_[s][a];
      if (seen[t]) continue;
      seen[t] = 1;
      parent[t] = {s, atoms_[a].first};
      if (accepting_[t]) {
        std::string out;
        for (State cur = t; cur != start_; cur = parent[cur].first)
          out += static_cast<char>(parent[cur].second);
        std::reverse(out.begin(), out.end());
        return out;
      }
      queue.push_back(t);
    }
  }
  return std::nullopt;
}

PatternAutomaton intersect(const PatternAutomaton& a, const PatternAutomaton& b) {
  return PatternAutomaton::product(a, b, false);
}

// Both operands are complete by construction, so the complement of `b` is
// just the flipped accepting set.
PatternAutomaton difference(const PatternAutomaton& a, const PatternAutomaton& b) {
  return PatternAutomaton::product(a, b, true);
}

PatternAutomaton PatternAutomaton::product(const PatternAutomaton& a,
                                           const PatternAutomaton& b,
                                           bool negate_b) {
  PatternAutomaton dfa;
  dfa.atoms_ = merge_atoms(a.atoms_, b.atoms_);
  const std::size_t natoms = dfa.atoms_.size();
  std::vector<std::size_t> map_a = atom_mapping(dfa.atoms_, a.atoms_);
  std::vector<std::size_t> map_b = atom_mapping(dfa.atoms_, b.atoms_);

  std::map<std::pair<State, State>, State> ids;
  std::vector<std::pair<State, State>> pairs;
  auto intern = [&](State sa, State sb) {
    auto [it, inserted] =
        ids.emplace(std::make_pair(sa, sb), static_cast<State>(pairs.size()));
    if (inserted) {
      pairs.emplace_back(sa, sb);
      dfa.next_.emplace_back(natoms, 0);
      bool acc_b = negate_b ? !b.accepting_[sb] : b.accepting_[sb];
      dfa.accepting_.push_back(a.accepting_[sa] && acc_b);
    }
    return it->second;
  };

  dfa.start_ = intern(a.start_, b.start_);
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    auto [sa, sb] = pairs[s];
    for (std::size_t atom = 0; atom < natoms; ++atom) {
      dfa.next_[s][atom] =
          intern(a.next_[sa][map_a[atom]], b.next_[sb][map_b[atom]]);
    }
  }
  return dfa;
}

}  // namespace ddsrecon::glob
