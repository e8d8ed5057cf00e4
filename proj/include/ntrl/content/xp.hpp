#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <span>
#include <string>

#include "ntrl/content/content_pack.hpp"

namespace ntrl {

inline Tier parse_tier(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (auto idx = tag_index(kTierTags, lower)) return static_cast<Tier>(*idx);
  throw Error(ErrorCode::InvalidTier, "unknown difficulty tier '" + std::string(text) + "'", "tier");
}

inline std::string tier_name(Tier t) {
  std::string s(kTierTags[static_cast<std::size_t>(t)]);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

struct XpBudget {
  long long per_character = 0;
  long long total = 0;
  Tier tier = Tier::Deadly;
  friend bool operator==(const XpBudget&, const XpBudget&) = default;
};

/// DMG budget for a party given each member's level. All members must share a
/// level present in the table.
inline XpBudget party_xp_budget(std::span<const int> member_levels, Tier tier, const ContentPack& pack) {
  if (member_levels.empty()) throw Error(ErrorCode::InvalidParty, "party is empty");
  XpBudget b;
  b.tier = tier;
  for (int level : member_levels) {
    auto it = std::find_if(pack.xp_thresholds.begin(), pack.xp_thresholds.end(),
                           [&](const XpThresholds& t) { return t.level == level; });
    if (it == pack.xp_thresholds.end())
      throw Error(ErrorCode::UnsupportedLevel, "no XP thresholds for level " + std::to_string(level));
    const long long per = it->per_tier[static_cast<std::size_t>(tier)];
    if (b.total != 0 && per != b.per_character)
      throw Error(ErrorCode::UnsupportedLevel, "mixed-level parties are not supported");
    b.per_character = per;
    b.total += per;
  }
  return b;
}

/// Plain sum of monster XP values; `monsters` holds pool indices.
inline long long raw_encounter_xp(std::span<const std::size_t> monsters, const ContentPack& pack) {
  if (monsters.empty()) throw Error(ErrorCode::EmptyEncounter, "encounter has no enemies");
  long long sum = 0;
  for (auto i : monsters) sum += pack.monsters.at(i).xp_value;
  return sum;
}

/// Raw XP scaled by the enemy-count multiplier, rounded down.
inline long long adjusted_xp_from_sum(long long raw_sum, std::size_t count, const ContentPack& pack) {
  return raw_sum * pack.multiplier_permille(count) / 1000;
}

inline long long adjusted_encounter_xp(std::span<const std::size_t> monsters, const ContentPack& pack) {
  return adjusted_xp_from_sum(raw_encounter_xp(monsters, pack), monsters.size(), pack);
}

}  // namespace ntrl
