#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "ntrl/error.hpp"
#include "ntrl/sim/rng.hpp"

namespace ntrl {

/// NdM+K dice expression. `count` may be 0 for a flat value ("5").
struct DiceExpr {
  int count = 0;
  int sides = 0;
  int modifier = 0;

  constexpr int min() const noexcept { return count + modifier; }
  constexpr int max() const noexcept { return count * sides + modifier; }
  constexpr double mean() const noexcept { return count * (sides + 1) / 2.0 + modifier; }
  /// Mean of the dice part only (what a critical hit doubles).
  constexpr double dice_mean() const noexcept { return count * (sides + 1) / 2.0; }

  friend bool operator==(const DiceExpr&, const DiceExpr&) = default;

  std::string to_string() const {
    std::string out;
    if (count > 0) out = std::to_string(count) + "d" + std::to_string(sides);
    if (modifier > 0 && count > 0) out += "+" + std::to_string(modifier);
    else if (modifier < 0) out += std::to_string(modifier);
    else if (count == 0) out = std::to_string(modifier);
    return out;
  }
};

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

}  // namespace detail

/// Parses "NdM", "NdM+K", "NdM-K", "dM" or a flat integer. Throws InvalidDice.
inline DiceExpr parse_dice(std::string_view text) {
  const auto fail = [&] { return Error(ErrorCode::InvalidDice, "bad dice expression '" + std::string(text) + "'"); };
  DiceExpr d;
  const auto dpos = text.find('d');
  if (dpos == std::string_view::npos) {
    if (!detail::parse_int(text, d.modifier)) throw fail();
    return d;
  }
  const auto count_part = text.substr(0, dpos);
  auto rest = text.substr(dpos + 1);
  if (count_part.empty()) {
    d.count = 1;
  } else if (!detail::parse_int(count_part, d.count) || d.count < 1 || count_part.front() == '+') {
    throw fail();
  }
  const auto sign = rest.find_first_of("+-");
  const auto sides_part = rest.substr(0, sign);
  if (!detail::parse_int(sides_part, d.sides) || d.sides < 1) throw fail();
  if (sign != std::string_view::npos) {
    const auto mod_part = rest.substr(sign + 1);
    if (mod_part.empty() || mod_part.front() == '+' || mod_part.front() == '-') throw fail();
    if (!detail::parse_int(mod_part, d.modifier)) throw fail();
    if (rest[sign] == '-') d.modifier = -d.modifier;
  }
  if (d.count > 100 || d.sides > 1000) throw fail();
  return d;
}

/// Rolls the dice part `times` times the count (2 for a critical hit).
inline int roll_dice_only(RngStream& rng, const DiceExpr& d, int times = 1) {
  int total = 0;
  for (int i = 0; i < d.count * times; ++i) total += rng.between(1, d.sides);
  return total;
}

inline int roll(RngStream& rng, const DiceExpr& d) { return roll_dice_only(rng, d) + d.modifier; }

}  // namespace ntrl
