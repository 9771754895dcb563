#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "msenc/errors.hpp"

namespace msenc {

// Inclusion pattern abc: membership flags for samples A, B, C.
// Pattern 000 is structurally unobserved.
struct Pattern {
  bool a = false;
  bool b = false;
  bool c = false;

  constexpr int index() const { return (int(a) << 2) | (int(b) << 1) | int(c); }

  static constexpr Pattern from_index(int i) {
    return Pattern{(i & 4) != 0, (i & 2) != 0, (i & 1) != 0};
  }

  std::string str() const {
    return std::string{a ? '1' : '0', b ? '1' : '0', c ? '1' : '0'};
  }

  auto operator<=>(const Pattern&) const = default;
};

// The seven observable patterns, in canonical row order.
inline constexpr std::array<Pattern, 7> kObservedPatterns = {
    Pattern{true, true, true},   Pattern{true, true, false},
    Pattern{true, false, true},  Pattern{true, false, false},
    Pattern{false, true, true},  Pattern{false, true, false},
    Pattern{false, false, true}};

// Flag with wildcard: '+' sums over that sample.
enum class Flag : std::uint8_t { Zero, One, Any };

inline char flag_char(Flag f) {
  switch (f) {
    case Flag::Zero: return '0';
    case Flag::One: return '1';
    default: return '+';
  }
}

// Inclusion pattern where positions may carry the wildcard '+'.
struct PatternQuery {
  Flag a = Flag::Any;
  Flag b = Flag::Any;
  Flag c = Flag::Any;

  static constexpr PatternQuery exact(Pattern p) {
    return PatternQuery{p.a ? Flag::One : Flag::Zero, p.b ? Flag::One : Flag::Zero,
                        p.c ? Flag::One : Flag::Zero};
  }

  bool matches(Pattern p) const {
    auto ok = [](Flag f, bool bit) {
      return f == Flag::Any || (f == Flag::One) == bit;
    };
    return ok(a, p.a) && ok(b, p.b) && ok(c, p.c);
  }

  // True when the query would sum over the structurally unobserved 000 cell.
  bool covers_unobserved() const { return matches(Pattern{}); }

  bool has_wildcard() const {
    return a == Flag::Any || b == Flag::Any || c == Flag::Any;
  }

  Pattern as_pattern() const {
    if (has_wildcard()) throw DataError("pattern query is not fully specified: " + str());
    return Pattern{a == Flag::One, b == Flag::One, c == Flag::One};
  }

  std::string str() const { return {flag_char(a), flag_char(b), flag_char(c)}; }

  auto operator<=>(const PatternQuery&) const = default;
};

}  // namespace msenc
