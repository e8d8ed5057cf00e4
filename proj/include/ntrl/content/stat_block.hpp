#pragma once

#include <array>
#include <bitset>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ntrl/content/dice.hpp"

namespace ntrl {

enum class Ability : std::uint8_t { Str, Dex, Con, Int, Wis, Cha };
inline constexpr std::size_t kAbilityCount = 6;
inline constexpr std::array<std::string_view, kAbilityCount> kAbilityTags = {"str", "dex", "con",
                                                                             "int", "wis", "cha"};

enum class DamageType : std::uint8_t {
  Acid, Bludgeoning, Cold, Fire, Force, Lightning, Necrotic, Piercing, Poison, Psychic, Radiant,
  Slashing, Thunder,
};
inline constexpr std::size_t kDamageTypeCount = 13;
inline constexpr std::array<std::string_view, kDamageTypeCount> kDamageTypeTags = {
    "acid", "bludgeoning", "cold", "fire", "force", "lightning", "necrotic",
    "piercing", "poison", "psychic", "radiant", "slashing", "thunder"};
using DamageSet = std::bitset<kDamageTypeCount>;

/// Status effects with a remaining-round counter.
enum class Condition : std::uint8_t {
  Poisoned, Frightened, Restrained, Exhaustion, Hasted, Blessed, Raging, Empowered, Dodging,
};
inline constexpr std::size_t kConditionCount = 9;
inline constexpr std::array<std::string_view, kConditionCount> kConditionTags = {
    "poisoned", "frightened", "restrained", "exhaustion", "hasted",
    "blessed", "raging", "empowered", "dodging"};

/// Special-ability tags the engine understands. A tag may carry a parameter
/// after a colon ("regeneration:10", "sneak_attack:3d6").
inline constexpr std::array<std::string_view, 10> kSpecialAbilityTags = {
    "action_surge", "divine_smite", "lay_on_hands", "martial_advantage", "pack_tactics",
    "rage", "regeneration", "second_wind", "sneak_attack", "uncanny_dodge"};

template <std::size_t N>
constexpr std::optional<std::size_t> tag_index(const std::array<std::string_view, N>& tags,
                                               std::string_view tag) {
  for (std::size_t i = 0; i < N; ++i)
    if (tags[i] == tag) return i;
  return std::nullopt;
}

struct AbilityScores {
  std::array<int, kAbilityCount> scores{10, 10, 10, 10, 10, 10};

  int score(Ability a) const noexcept { return scores[static_cast<std::size_t>(a)]; }
  int modifier(Ability a) const noexcept { return modifier_of(score(a)); }
  static constexpr int modifier_of(int score) noexcept {
    const int d = score - 10;
    return d >= 0 ? d / 2 : -((1 - d) / 2);
  }
  friend bool operator==(const AbilityScores&, const AbilityScores&) = default;
};

enum class Kind : std::uint8_t { Pc, Monster };
enum class RangeKind : std::uint8_t { Melee, Ranged };
enum class ActionCost : std::uint8_t { Action, Bonus };

struct OnHitEffect {
  Condition condition = Condition::Poisoned;
  Ability save = Ability::Con;
  int dc = 10;
  int rounds = 1;
};

struct AttackSpec {
  std::string name;
  int to_hit_bonus = 0;
  DiceExpr damage;
  DamageType damage_type = DamageType::Bludgeoning;
  RangeKind range_kind = RangeKind::Melee;
  /// Swings made by one use of this attack (Multiattack / Extra Attack).
  int count = 1;
  /// nullopt means unlimited.
  std::optional<int> uses_per_combat;
  ActionCost action = ActionCost::Action;
  std::optional<OnHitEffect> on_hit;
};

enum class SpellEffect : std::uint8_t { Attack, SaveDamage, AutoDamage, Heal, Buff, Condition, Summon };
inline constexpr std::array<std::string_view, 7> kSpellEffectTags = {
    "attack", "save_damage", "auto_damage", "heal", "buff", "condition", "summon"};

struct SpellSpec {
  std::string id;
  std::string name;
  int level = 0;
  SpellEffect effect = SpellEffect::Attack;
  ActionCost action = ActionCost::Action;
  DiceExpr damage;
  DamageType damage_type = DamageType::Force;
  /// Attack rolls (or darts) per cast.
  int rays = 1;
  bool add_modifier = false;
  Ability save = Ability::Dex;
  bool half_on_save = false;
  int targets = 1;
  DiceExpr heal;
  Condition condition = Condition::Blessed;
  int rounds = 0;
  bool self_only = false;
  std::string summon_id;
  std::size_t summon_index = 0;
  int summon_count = 0;
};

/// Parsed form of the special-ability tags.
struct Traits {
  bool pack_tactics = false;
  int regeneration = 0;
  /// Once-per-turn bonus damage when an ally is up or the attack has advantage.
  DiceExpr sneak_attack;
  bool second_wind = false;
  bool action_surge = false;
  int rage_uses = 0;
  bool divine_smite = false;
  int lay_on_hands = 0;
  bool uncanny_dodge = false;
};

inline constexpr std::size_t kMaxSpellLevel = 5;

struct StatBlock {
  std::string id;
  std::string name;
  Kind kind = Kind::Monster;
  /// Character level for PCs; monsters carry `challenge_rating` instead.
  int level = 0;
  std::string challenge_rating;
  std::string character_class;
  int hp_max = 1;
  int ac = 10;
  AbilityScores abilities;
  int proficiency_bonus = 2;
  std::bitset<kAbilityCount> save_proficiencies;
  DamageSet resistances;
  DamageSet immunities;
  std::vector<AttackSpec> attacks;
  std::vector<std::string> spells;
  /// Indices into ContentPack::spells, resolved at load.
  std::vector<std::size_t> spell_indices;
  std::array<int, kMaxSpellLevel> spell_slots{};
  std::optional<Ability> spellcasting_ability;
  std::vector<std::string> special_abilities;
  Traits traits;
  int xp_value = 0;
  int initiative_bonus = 0;

  int spell_modifier() const noexcept {
    return spellcasting_ability ? abilities.modifier(*spellcasting_ability) : 0;
  }
  int spell_attack_bonus() const noexcept { return proficiency_bonus + spell_modifier(); }
  int spell_save_dc() const noexcept { return 8 + proficiency_bonus + spell_modifier(); }
  int save_bonus(Ability a) const noexcept {
    return abilities.modifier(a) +
           (save_proficiencies.test(static_cast<std::size_t>(a)) ? proficiency_bonus : 0);
  }
};

}  // namespace ntrl
