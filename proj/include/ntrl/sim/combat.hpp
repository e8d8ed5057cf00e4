#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ntrl/content/content_pack.hpp"
#include "ntrl/sim/rng.hpp"
#include "ntrl/sim/roster.hpp"
#include "ntrl/sim/utility.hpp"

namespace ntrl {

inline constexpr int kRoundCap = 50;

enum class Side : std::uint8_t { Party, Enemy };
enum class LifeState : std::uint8_t { Active, Unconscious, Stable, Dead, Removed };
inline constexpr std::array<std::string_view, 5> kLifeStateTags = {"ACTIVE", "UNCONSCIOUS", "STABLE", "DEAD",
                                                                   "REMOVED"};
enum class Winner : std::uint8_t { Party, Enemy, Draw };
inline constexpr std::array<std::string_view, 3> kWinnerTags = {"PARTY", "ENEMY", "DRAW"};

struct CombatantState {
  const StatBlock* base = nullptr;
  std::string id;
  Side side = Side::Party;
  int hp_current = 0;
  int hp_start = 0;
  LifeState life_state = LifeState::Active;
  int death_successes = 0;
  int death_failures = 0;
  /// Remaining rounds per condition; 0 means absent.
  std::array<int, kConditionCount> conditions{};
  int initiative_roll = 0;
  std::optional<std::size_t> summoned_by;
  std::size_t roster_index = 0;

  // Per-combat resources.
  std::vector<int> attack_uses;  // -1 = unlimited
  std::array<int, kMaxSpellLevel> slots{};
  int second_wind_uses = 0;
  int action_surge_uses = 0;
  int rage_uses = 0;
  int lay_on_hands_pool = 0;
  int healing_received = 0;
  bool took_fire_or_acid = false;
  bool reaction_used = false;
  bool sneak_used = false;

  bool active() const noexcept { return life_state == LifeState::Active; }
  bool downed() const noexcept {
    return life_state == LifeState::Unconscious || life_state == LifeState::Stable;
  }
  bool is_pc() const noexcept { return base->kind == Kind::Pc; }
  bool has(Condition c) const noexcept { return conditions[static_cast<std::size_t>(c)] > 0; }
  void add_condition(Condition c, int rounds) noexcept {
    auto& slot = conditions[static_cast<std::size_t>(c)];
    slot = std::max(slot, rounds);
  }
};

struct CombatEvent {
  int round = 0;
  std::string actor;
  std::string action;
  std::vector<std::string> targets;
  std::vector<int> rolls;
  int damage = 0;
  std::string note;
  friend bool operator==(const CombatEvent&, const CombatEvent&) = default;
};

inline ordered_json to_json(const CombatEvent& e) {
  ordered_json j;
  j["round"] = e.round;
  j["actor"] = e.actor;
  j["action"] = e.action;
  j["targets"] = e.targets;
  j["rolls"] = e.rolls;
  j["damage"] = e.damage;
  j["state"] = e.note;
  return j;
}

/// JSON-lines rendering of a combat log.
inline std::string log_to_jsonl(const std::vector<CombatEvent>& log) {
  std::string out;
  for (const auto& e : log) {
    out += to_json(e).dump();
    out += '\n';
  }
  return out;
}

struct CombatOptions {
  bool record_log = false;
  int round_cap = kRoundCap;
  UtilityTable utility{};
};

struct CombatResult {
  Winner winner = Winner::Draw;
  int rounds = 0;
  int party_deaths = 0;
  bool tpk = false;
  long long damage_to_party = 0;
  double remaining_party_hp_fraction = 0.0;
  // Per original party member, roster order.
  std::vector<int> hp_start;
  std::vector<int> hp_end;
  std::vector<int> healing_received;
  std::vector<LifeState> final_states;
  std::vector<CombatEvent> log;
};

struct RosterEntry {
  const StatBlock* block = nullptr;
  int hp_current = 0;
};

/// Mutable state of one fight.
struct CombatState {
  const ContentPack* pack = nullptr;
  CombatOptions options;
  std::vector<CombatantState> combatants;
  std::vector<std::size_t> order;
  std::size_t original_party = 0;
  std::size_t summons_created = 0;
  int round = 0;
  long long damage_to_party = 0;
  std::vector<CombatEvent> log;

  bool logging() const noexcept { return options.record_log; }
  void emit(CombatEvent e) {
    if (options.record_log) log.push_back(std::move(e));
  }
};

inline CombatantState make_combatant(const StatBlock& block, int hp, Side side, std::string id) {
  CombatantState c;
  c.base = &block;
  c.id = std::move(id);
  c.side = side;
  c.hp_current = hp;
  c.hp_start = hp;
  for (const auto& a : block.attacks) c.attack_uses.push_back(a.uses_per_combat ? *a.uses_per_combat : -1);
  c.slots = block.spell_slots;
  c.second_wind_uses = block.traits.second_wind ? 1 : 0;
  c.action_surge_uses = block.traits.action_surge ? 1 : 0;
  c.rage_uses = block.traits.rage_uses;
  c.lay_on_hands_pool = block.traits.lay_on_hands;
  return c;
}

// ---------------------------------------------------------------------------
// Probability helpers shared by scoring and execution.

inline bool any_active(const CombatState& s, Side side) {
  for (const auto& c : s.combatants)
    if (c.side == side && c.active()) return true;
  return false;
}

inline bool ally_active_besides(const CombatState& s, std::size_t self) {
  const auto side = s.combatants[self].side;
  for (std::size_t i = 0; i < s.combatants.size(); ++i)
    if (i != self && s.combatants[i].side == side && s.combatants[i].active()) return true;
  return false;
}

inline int effective_ac(const CombatantState& t) noexcept { return t.base->ac + (t.has(Condition::Hasted) ? 2 : 0); }

/// +1 advantage, -1 disadvantage, 0 straight roll.
inline int attack_advantage(const CombatState& s, std::size_t attacker, std::size_t target) {
  const auto& a = s.combatants[attacker];
  const auto& t = s.combatants[target];
  const bool adv = (a.base->traits.pack_tactics && ally_active_besides(s, attacker)) || t.has(Condition::Restrained);
  const bool dis = a.has(Condition::Poisoned) || a.has(Condition::Frightened) || a.has(Condition::Restrained) ||
                   a.has(Condition::Exhaustion) || t.has(Condition::Dodging);
  return static_cast<int>(adv) - static_cast<int>(dis);
}

/// P(hit) for d20 + to_hit + extra >= ac, natural 1 misses and natural 20 hits.
inline double hit_probability(double to_hit, int ac, int advantage) {
  const double p = std::clamp((21.0 - (ac - to_hit)) / 20.0, 0.05, 0.95);
  if (advantage > 0) return 1.0 - (1.0 - p) * (1.0 - p);
  if (advantage < 0) return p * p;
  return p;
}

inline double damage_factor(const CombatantState& t, DamageType type) {
  const auto i = static_cast<std::size_t>(type);
  if (t.base->immunities.test(i)) return 0.0;
  const bool physical = type == DamageType::Bludgeoning || type == DamageType::Piercing || type == DamageType::Slashing;
  if (t.base->resistances.test(i) || (physical && t.has(Condition::Raging))) return 0.5;
  return 1.0;
}

inline int scale_damage(const CombatantState& t, DamageType type, int amount) {
  const double f = damage_factor(t, type);
  if (f == 0.0) return 0;
  if (f == 0.5) return amount / 2;
  return amount;
}

inline double save_probability(const CombatantState& t, Ability ability, int dc) {
  const double bonus = t.base->save_bonus(ability) + (t.has(Condition::Blessed) ? 2.5 : 0.0);
  return std::clamp((21.0 - (dc - bonus)) / 20.0, 0.0, 1.0);
}

/// Expected damage per round of a combatant's best attack against AC 15.
inline double threat(const CombatantState& c) {
  double best = 0.0;
  for (const auto& a : c.base->attacks)
    best = std::max(best, a.count * hit_probability(a.to_hit_bonus, 15, 0) * a.damage.mean());
  return best;
}

inline bool sneak_eligible(const CombatState& s, std::size_t attacker, int advantage) {
  const auto& a = s.combatants[attacker];
  if (a.base->traits.sneak_attack.count == 0 || a.sneak_used || advantage < 0) return false;
  return advantage > 0 || ally_active_besides(s, attacker);
}

inline std::optional<std::size_t> lowest_slot(const CombatantState& c, int min_level) {
  if (min_level <= 0) return std::nullopt;
  for (std::size_t l = static_cast<std::size_t>(min_level - 1); l < kMaxSpellLevel; ++l)
    if (c.slots[l] > 0) return l;
  return std::nullopt;
}

inline bool can_cast(const CombatantState& c, const SpellSpec& spell) {
  return spell.level == 0 || lowest_slot(c, spell.level).has_value();
}

// ---------------------------------------------------------------------------
// Action options and scoring.

enum class OptionKind : std::uint8_t { WeaponAttack, Spell, LayOnHands, SecondWind, Rage };

struct TargetList {
  std::array<std::uint16_t, kMaxEnemies> idx{};
  std::uint8_t size = 0;
  void push(std::size_t i) {
    if (size < idx.size()) idx[size++] = static_cast<std::uint16_t>(i);
  }
  std::size_t operator[](std::size_t k) const { return idx[k]; }
};

struct ActionOption {
  OptionKind kind = OptionKind::WeaponAttack;
  /// Attack index within the stat block, or spell index within the pack.
  std::size_t index = 0;
  ActionCost cost = ActionCost::Action;
  /// Single weapon swing granted by haste.
  bool haste_attack = false;
  TargetList targets;
};

struct Economy {
  bool action = true;
  bool bonus = true;
  bool haste_attack = false;
};

inline double kill_bonus_if(const CombatState& s, double expected, const CombatantState& t) {
  return expected >= t.hp_current ? s.options.utility.kill_bonus : 0.0;
}

inline double weapon_expected_damage(const CombatState& s, std::size_t actor, const AttackSpec& attack,
                                     std::size_t target, int swings) {
  const auto& a = s.combatants[actor];
  const auto& t = s.combatants[target];
  const int adv = attack_advantage(s, actor, target);
  const double to_hit = attack.to_hit_bonus + (a.has(Condition::Blessed) ? 2.5 : 0.0);
  const double p = hit_probability(to_hit, effective_ac(t), adv);
  double per_hit = attack.damage.mean();
  if (attack.range_kind == RangeKind::Melee && a.has(Condition::Raging)) per_hit += 2.0;
  if (a.has(Condition::Empowered)) per_hit += 3.5;
  const double f = damage_factor(t, attack.damage_type);
  double expected = swings * p * per_hit * f;
  if (sneak_eligible(s, actor, adv))
    expected += (1.0 - std::pow(1.0 - p, swings)) * a.base->traits.sneak_attack.mean() * f;
  return expected;
}

inline double spell_expected_damage(const CombatState& s, std::size_t actor, const SpellSpec& spell,
                                    std::size_t target) {
  const auto& a = s.combatants[actor];
  const auto& t = s.combatants[target];
  const double f = damage_factor(t, spell.damage_type);
  const double per = spell.damage.mean() + (spell.add_modifier ? a.base->spell_modifier() : 0);
  switch (spell.effect) {
    case SpellEffect::Attack: {
      const int adv = attack_advantage(s, actor, target);
      const double to_hit = a.base->spell_attack_bonus() + (a.has(Condition::Blessed) ? 2.5 : 0.0);
      const double extra = a.has(Condition::Empowered) ? 3.5 : 0.0;
      return spell.rays * hit_probability(to_hit, effective_ac(t), adv) * (per + extra) * f;
    }
    case SpellEffect::AutoDamage:
      return spell.rays * per * f;
    case SpellEffect::SaveDamage: {
      const double ps = save_probability(t, spell.save, a.base->spell_save_dc());
      return per * f * ((1.0 - ps) + ps * (spell.half_on_save ? 0.5 : 0.0));
    }
    default:
      return 0.0;
  }
}

inline double heal_score(const CombatState& s, double mean_heal, const CombatantState& t) {
  const auto& u = s.options.utility;
  if (t.life_state == LifeState::Dead || t.life_state == LifeState::Removed) return 0.0;
  const int missing = t.base->hp_max - t.hp_current;
  if (missing <= 0) return 0.0;
  const double amount = std::min<double>(mean_heal, missing);
  if (t.downed()) return u.downed_ally_bonus + u.heal_weight * amount;
  if (static_cast<double>(missing) / t.base->hp_max < u.heal_threshold) return 0.0;
  return u.heal_weight * amount;
}

/// Deterministic utility of `option` for `actor`, before jitter. Options that
/// would be wasted (dead target, nothing to heal) score <= 0.
inline double score_action(const CombatState& s, std::size_t actor, const ActionOption& option) {
  const auto& u = s.options.utility;
  const auto& a = s.combatants[actor];
  const Side foes = a.side == Side::Party ? Side::Enemy : Side::Party;
  if (!a.active() || !any_active(s, foes)) return 0.0;
  const auto damage_target_ok = [&](std::size_t t) { return s.combatants[t].active(); };

  switch (option.kind) {
    case OptionKind::WeaponAttack: {
      const auto& attack = a.base->attacks[option.index];
      const auto t = option.targets[0];
      if (!damage_target_ok(t)) return 0.0;
      const double e = weapon_expected_damage(s, actor, attack, t, option.haste_attack ? 1 : attack.count);
      return e + kill_bonus_if(s, e, s.combatants[t]);
    }
    case OptionKind::Spell: {
      const auto& spell = s.pack->spells[option.index];
      const double slot_cost = u.slot_cost_per_level * spell.level;
      switch (spell.effect) {
        case SpellEffect::Attack:
        case SpellEffect::AutoDamage:
        case SpellEffect::SaveDamage: {
          double total = 0.0;
          for (std::size_t k = 0; k < option.targets.size; ++k) {
            const auto t = option.targets[k];
            if (!damage_target_ok(t)) continue;
            const double e = spell_expected_damage(s, actor, spell, t);
            total += e + kill_bonus_if(s, e, s.combatants[t]);
          }
          return total > 0.0 ? total - slot_cost : 0.0;
        }
        case SpellEffect::Heal: {
          const double mean = spell.heal.mean() + (spell.add_modifier ? a.base->spell_modifier() : 0);
          const double h = heal_score(s, mean, s.combatants[option.targets[0]]);
          return h > 0.0 ? h - slot_cost : 0.0;
        }
        case SpellEffect::Buff: {
          double value = 0.0;
          for (std::size_t k = 0; k < option.targets.size; ++k) {
            const auto& t = s.combatants[option.targets[k]];
            if (!t.active() || t.has(spell.condition)) continue;
            switch (spell.condition) {
              case Condition::Blessed: value += u.bless_value; break;
              case Condition::Hasted: value += u.haste_value; break;
              case Condition::Empowered: value += u.empowered_value; break;
              default: value += u.bless_value; break;
            }
          }
          return value > 0.0 ? value - slot_cost : 0.0;
        }
        case SpellEffect::Condition: {
          const auto& t = s.combatants[option.targets[0]];
          if (!t.active() || t.has(spell.condition)) return 0.0;
          const double fail = 1.0 - save_probability(t, spell.save, a.base->spell_save_dc());
          return u.condition_weight * fail * threat(t) - slot_cost;
        }
        case SpellEffect::Summon: {
          for (const auto& c : s.combatants)
            if (c.summoned_by == actor && c.active()) return 0.0;
          return u.summon_value * spell.summon_count - slot_cost;
        }
      }
      return 0.0;
    }
    case OptionKind::LayOnHands:
      return heal_score(s, a.lay_on_hands_pool, s.combatants[option.targets[0]]);
    case OptionKind::SecondWind:
      return heal_score(s, 5.5 + a.base->level, a);
    case OptionKind::Rage:
      return a.has(Condition::Raging) ? 0.0 : u.rage_value;
  }
  return 0.0;
}

/// The `count` foes with the highest expected damage from `spell`.
inline TargetList best_spell_targets(const CombatState& s, std::size_t actor, const SpellSpec& spell, int count) {
  std::vector<std::pair<double, std::size_t>> ranked;
  const Side foes = s.combatants[actor].side == Side::Party ? Side::Enemy : Side::Party;
  for (std::size_t i = 0; i < s.combatants.size(); ++i)
    if (s.combatants[i].side == foes && s.combatants[i].active())
      ranked.emplace_back(-spell_expected_damage(s, actor, spell, i), i);
  std::sort(ranked.begin(), ranked.end());
  TargetList out;
  for (std::size_t k = 0; k < ranked.size() && k < static_cast<std::size_t>(count); ++k) out.push(ranked[k].second);
  return out;
}

/// Every legal option for `actor` under the remaining action economy.
inline std::vector<ActionOption> enumerate_options(const CombatState& s, std::size_t actor, const Economy& econ) {
  std::vector<ActionOption> out;
  const auto& a = s.combatants[actor];
  const Side foes = a.side == Side::Party ? Side::Enemy : Side::Party;
  const auto cost_ok = [&](ActionCost c) { return c == ActionCost::Action ? econ.action : econ.bonus; };

  for (std::size_t i = 0; i < a.base->attacks.size(); ++i) {
    const auto& attack = a.base->attacks[i];
    if (a.attack_uses[i] == 0) continue;
    const bool normal = cost_ok(attack.action);
    const bool haste = !normal && econ.haste_attack && attack.action == ActionCost::Action;
    if (!normal && !haste) continue;
    for (std::size_t t = 0; t < s.combatants.size(); ++t) {
      if (s.combatants[t].side != foes || !s.combatants[t].active()) continue;
      ActionOption o{OptionKind::WeaponAttack, i, attack.action, haste, {}};
      o.targets.push(t);
      out.push_back(o);
    }
  }

  for (auto spell_index : a.base->spell_indices) {
    const auto& spell = s.pack->spells[spell_index];
    if (!cost_ok(spell.action) || !can_cast(a, spell)) continue;
    ActionOption base{OptionKind::Spell, spell_index, spell.action, false, {}};
    switch (spell.effect) {
      case SpellEffect::Attack:
      case SpellEffect::AutoDamage:
      case SpellEffect::Condition:
        for (std::size_t t = 0; t < s.combatants.size(); ++t) {
          if (s.combatants[t].side != foes || !s.combatants[t].active()) continue;
          auto o = base;
          o.targets.push(t);
          out.push_back(o);
        }
        break;
      case SpellEffect::SaveDamage:
        if (spell.targets > 1) {
          auto o = base;
          o.targets = best_spell_targets(s, actor, spell, spell.targets);
          if (o.targets.size > 0) out.push_back(o);
        } else {
          for (std::size_t t = 0; t < s.combatants.size(); ++t) {
            if (s.combatants[t].side != foes || !s.combatants[t].active()) continue;
            auto o = base;
            o.targets.push(t);
            out.push_back(o);
          }
        }
        break;
      case SpellEffect::Heal:
        for (std::size_t t = 0; t < s.combatants.size(); ++t) {
          const auto& c = s.combatants[t];
          if (c.side != a.side || !(c.active() || c.downed()) || c.hp_current >= c.base->hp_max) continue;
          auto o = base;
          o.targets.push(t);
          out.push_back(o);
        }
        break;
      case SpellEffect::Buff:
        if (spell.self_only) {
          auto o = base;
          o.targets.push(actor);
          out.push_back(o);
        } else if (spell.targets == 1) {
          for (std::size_t t = 0; t < s.combatants.size(); ++t) {
            const auto& c = s.combatants[t];
            if (c.side != a.side || !c.active() || c.has(spell.condition)) continue;
            auto o = base;
            o.targets.push(t);
            out.push_back(o);
          }
        } else {
          // Buff the strongest hitters first.
          std::vector<std::pair<double, std::size_t>> ranked;
          for (std::size_t t = 0; t < s.combatants.size(); ++t) {
            const auto& c = s.combatants[t];
            if (c.side == a.side && c.active() && !c.has(spell.condition)) ranked.emplace_back(-threat(c), t);
          }
          std::sort(ranked.begin(), ranked.end());
          auto o = base;
          for (std::size_t k = 0; k < ranked.size() && k < static_cast<std::size_t>(spell.targets); ++k)
            o.targets.push(ranked[k].second);
          if (o.targets.size > 0) out.push_back(o);
        }
        break;
      case SpellEffect::Summon:
        out.push_back(base);
        break;
    }
  }

  if (a.lay_on_hands_pool > 0 && econ.action) {
    for (std::size_t t = 0; t < s.combatants.size(); ++t) {
      const auto& c = s.combatants[t];
      if (c.side != a.side || !(c.active() || c.downed()) || c.hp_current >= c.base->hp_max) continue;
      ActionOption o{OptionKind::LayOnHands, 0, ActionCost::Action, false, {}};
      o.targets.push(t);
      out.push_back(o);
    }
  }
  if (a.second_wind_uses > 0 && econ.bonus) {
    ActionOption o{OptionKind::SecondWind, 0, ActionCost::Bonus, false, {}};
    o.targets.push(actor);
    out.push_back(o);
  }
  if (a.rage_uses > 0 && econ.bonus) {
    ActionOption o{OptionKind::Rage, 0, ActionCost::Bonus, false, {}};
    o.targets.push(actor);
    out.push_back(o);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hit points, death and healing.

/// Applies a natural d20 death-save roll to an unconscious PC.
inline void apply_death_save(CombatantState& c, int d20) {
  if (c.life_state != LifeState::Unconscious) return;
  if (d20 >= 20) {
    c.hp_current = 1;
    c.healing_received += 1;
    c.life_state = LifeState::Active;
    c.death_successes = c.death_failures = 0;
    return;
  }
  if (d20 <= 1) c.death_failures += 2;
  else if (d20 < 10) c.death_failures += 1;
  else c.death_successes += 1;
  if (c.death_failures >= 3) {
    c.death_failures = 3;
    c.life_state = LifeState::Dead;
  } else if (c.death_successes >= 3) {
    c.death_successes = 3;
    c.life_state = LifeState::Stable;
  }
}

/// Handles a combatant that just reached 0 HP: monsters (enemies and summons)
/// leave the fight, PCs fall unconscious and start making death saves.
inline void resolve_death_processing(CombatState& s, std::size_t idx) {
  auto& c = s.combatants[idx];
  if (c.hp_current > 0 || !c.active()) return;
  if (c.is_pc()) {
    c.life_state = LifeState::Unconscious;
    c.death_successes = c.death_failures = 0;
  } else {
    c.life_state = LifeState::Removed;
  }
  if (s.logging()) s.emit({s.round, c.id, "state", {}, {}, 0, std::string(kLifeStateTags[static_cast<std::size_t>(c.life_state)])});
}

inline int apply_damage(CombatState& s, std::size_t idx, int amount, DamageType type) {
  auto& c = s.combatants[idx];
  if (amount <= 0 || !c.active()) return 0;
  const int dealt = std::min(amount, c.hp_current);
  c.hp_current -= dealt;
  if (c.is_pc()) s.damage_to_party += dealt;
  if (type == DamageType::Fire || type == DamageType::Acid) c.took_fire_or_acid = true;
  if (c.hp_current == 0) resolve_death_processing(s, idx);
  return dealt;
}

inline int apply_heal(CombatState& s, std::size_t idx, int amount) {
  auto& c = s.combatants[idx];
  if (c.life_state == LifeState::Dead || c.life_state == LifeState::Removed) return 0;
  const int healed = std::clamp(amount, c.downed() ? 1 : 0, c.base->hp_max - c.hp_current);
  c.hp_current += healed;
  c.healing_received += healed;
  if (c.hp_current > 0 && c.downed()) {
    c.life_state = LifeState::Active;
    c.death_successes = c.death_failures = 0;
  }
  return healed;
}

// ---------------------------------------------------------------------------
// Execution.

namespace detail {

struct AttackRoll {
  bool hit = false;
  bool crit = false;
  int natural = 0;
};

inline AttackRoll roll_attack(CombatState& s, std::size_t attacker, std::size_t target, int to_hit, RngStream& rng,
                              std::vector<int>* rolls) {
  const int adv = attack_advantage(s, attacker, target);
  int d = rng.d20();
  if (adv != 0) {
    const int d2 = rng.d20();
    d = adv > 0 ? std::max(d, d2) : std::min(d, d2);
  }
  int total = d + to_hit;
  if (s.combatants[attacker].has(Condition::Blessed)) total += rng.between(1, 4);
  if (rolls) rolls->push_back(d);
  AttackRoll r;
  r.natural = d;
  r.crit = d == 20;
  r.hit = d != 1 && (r.crit || total >= effective_ac(s.combatants[target]));
  return r;
}

/// Next foe for follow-up swings once the original target drops: lowest HP first.
inline std::optional<std::size_t> retarget(const CombatState& s, std::size_t actor) {
  const Side foes = s.combatants[actor].side == Side::Party ? Side::Enemy : Side::Party;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < s.combatants.size(); ++i) {
    const auto& c = s.combatants[i];
    if (c.side != foes || !c.active()) continue;
    if (!best || c.hp_current < s.combatants[*best].hp_current) best = i;
  }
  return best;
}

inline int roll_save(const CombatantState& t, Ability ability, RngStream& rng) {
  int total = rng.d20() + t.base->save_bonus(ability);
  if (t.has(Condition::Blessed)) total += rng.between(1, 4);
  return total;
}

inline void consume_slot(CombatantState& c, int level) {
  if (auto slot = lowest_slot(c, level)) --c.slots[*slot];
}

inline void weapon_attack(CombatState& s, std::size_t actor, const ActionOption& o, RngStream& rng) {
  auto& a = s.combatants[actor];
  const auto& attack = a.base->attacks[o.index];
  if (a.attack_uses[o.index] > 0) --a.attack_uses[o.index];
  const int swings = o.haste_attack ? 1 : attack.count;
  std::optional<std::size_t> target = o.targets[0];
  CombatEvent ev;
  int total_damage = 0;
  for (int k = 0; k < swings; ++k) {
    if (!target || !s.combatants[*target].active()) target = retarget(s, actor);
    if (!target) break;
    const auto t = *target;
    if (s.logging()) ev.targets.push_back(s.combatants[t].id);
    const int adv = attack_advantage(s, actor, t);
    const bool sneak = sneak_eligible(s, actor, adv);
    const auto roll = roll_attack(s, actor, t, attack.to_hit_bonus, rng, s.logging() ? &ev.rolls : nullptr);
    if (!roll.hit) continue;
    const int times = roll.crit ? 2 : 1;
    int dmg = roll_dice_only(rng, attack.damage, times) + attack.damage.modifier;
    if (attack.range_kind == RangeKind::Melee && a.has(Condition::Raging)) dmg += 2;
    if (a.has(Condition::Empowered)) dmg += roll_dice_only(rng, DiceExpr{1, 6, 0}, times);
    if (sneak) {
      dmg += roll_dice_only(rng, a.base->traits.sneak_attack, times) + a.base->traits.sneak_attack.modifier;
      a.sneak_used = true;
    }
    auto& tgt = s.combatants[t];
    int scaled = scale_damage(tgt, attack.damage_type, dmg);
    int smite = 0;
    if (a.base->traits.divine_smite && attack.range_kind == RangeKind::Melee && scaled < tgt.hp_current) {
      if (auto slot = lowest_slot(a, 1)) {
        --a.slots[*slot];
        const int dice = std::min(5, 2 + static_cast<int>(*slot));
        smite = scale_damage(tgt, DamageType::Radiant, roll_dice_only(rng, DiceExpr{dice, 8, 0}, times));
      }
    }
    if (tgt.base->traits.uncanny_dodge && !tgt.reaction_used) {
      tgt.reaction_used = true;
      scaled /= 2;
      smite /= 2;
    }
    total_damage += apply_damage(s, t, scaled, attack.damage_type);
    total_damage += apply_damage(s, t, smite, DamageType::Radiant);
    if (attack.on_hit && s.combatants[t].active()) {
      const auto& eff = *attack.on_hit;
      if (roll_save(s.combatants[t], eff.save, rng) < eff.dc) s.combatants[t].add_condition(eff.condition, eff.rounds);
    }
  }
  if (s.logging()) {
    ev.round = s.round;
    ev.actor = a.id;
    ev.action = std::string(o.haste_attack ? "haste_attack:" : "attack:") + attack.name;
    ev.damage = total_damage;
    s.emit(std::move(ev));
  }
}

inline void spawn_summons(CombatState& s, std::size_t caster, const SpellSpec& spell) {
  const auto& block = s.pack->monsters[spell.summon_index];
  for (int k = 0; k < spell.summon_count; ++k) {
    auto c = make_combatant(block, block.hp_max, s.combatants[caster].side,
                            "s" + std::to_string(s.summons_created++) + ":" + block.id);
    c.summoned_by = caster;
    c.initiative_roll = s.combatants[caster].initiative_roll;
    c.roster_index = s.combatants.size();
    s.combatants.push_back(std::move(c));
    auto pos = std::find(s.order.begin(), s.order.end(), caster);
    s.order.insert(pos == s.order.end() ? pos : pos + 1, s.combatants.size() - 1);
  }
}

inline void cast_spell(CombatState& s, std::size_t actor, const ActionOption& o, RngStream& rng) {
  const auto& spell = s.pack->spells[o.index];
  consume_slot(s.combatants[actor], spell.level);
  const auto& block = *s.combatants[actor].base;
  const int mod = spell.add_modifier ? block.spell_modifier() : 0;
  CombatEvent ev;
  int total_damage = 0;
  const auto note_target = [&](std::size_t t) {
    if (s.logging()) ev.targets.push_back(s.combatants[t].id);
  };
  switch (spell.effect) {
    case SpellEffect::Attack:
    case SpellEffect::AutoDamage: {
      std::optional<std::size_t> target = o.targets[0];
      for (int r = 0; r < spell.rays; ++r) {
        if (!target || !s.combatants[*target].active()) target = retarget(s, actor);
        if (!target) break;
        const auto t = *target;
        note_target(t);
        int times = 1;
        if (spell.effect == SpellEffect::Attack) {
          const auto roll = roll_attack(s, actor, t, block.spell_attack_bonus(), rng, s.logging() ? &ev.rolls : nullptr);
          if (!roll.hit) continue;
          times = roll.crit ? 2 : 1;
        }
        int dmg = roll_dice_only(rng, spell.damage, times) + spell.damage.modifier + mod;
        if (spell.effect == SpellEffect::Attack && s.combatants[actor].has(Condition::Empowered))
          dmg += roll_dice_only(rng, DiceExpr{1, 6, 0}, times);
        total_damage += apply_damage(s, t, scale_damage(s.combatants[t], spell.damage_type, dmg), spell.damage_type);
      }
      break;
    }
    case SpellEffect::SaveDamage: {
      const int dmg = roll(rng, spell.damage) + mod;
      for (std::size_t k = 0; k < o.targets.size; ++k) {
        const auto t = o.targets[k];
        if (!s.combatants[t].active()) continue;
        note_target(t);
        const int save = roll_save(s.combatants[t], spell.save, rng);
        if (s.logging()) ev.rolls.push_back(save);
        int amount = dmg;
        if (save >= block.spell_save_dc()) amount = spell.half_on_save ? dmg / 2 : 0;
        total_damage += apply_damage(s, t, scale_damage(s.combatants[t], spell.damage_type, amount), spell.damage_type);
      }
      break;
    }
    case SpellEffect::Heal: {
      const auto t = o.targets[0];
      note_target(t);
      total_damage = -apply_heal(s, t, roll(rng, spell.heal) + mod);
      break;
    }
    case SpellEffect::Buff:
      for (std::size_t k = 0; k < o.targets.size; ++k) {
        note_target(o.targets[k]);
        s.combatants[o.targets[k]].add_condition(spell.condition, spell.rounds);
      }
      break;
    case SpellEffect::Condition: {
      const auto t = o.targets[0];
      note_target(t);
      const int save = roll_save(s.combatants[t], spell.save, rng);
      if (s.logging()) ev.rolls.push_back(save);
      if (save < block.spell_save_dc()) s.combatants[t].add_condition(spell.condition, spell.rounds);
      break;
    }
    case SpellEffect::Summon:
      spawn_summons(s, actor, spell);
      break;
  }
  if (s.logging()) {
    ev.round = s.round;
    ev.actor = s.combatants[actor].id;
    ev.action = "spell:" + spell.id;
    ev.damage = total_damage;
    s.emit(std::move(ev));
  }
}

}  // namespace detail

inline void execute_action(CombatState& s, std::size_t actor, const ActionOption& o, RngStream& rng) {
  switch (o.kind) {
    case OptionKind::WeaponAttack:
      detail::weapon_attack(s, actor, o, rng);
      return;
    case OptionKind::Spell:
      detail::cast_spell(s, actor, o, rng);
      return;
    case OptionKind::LayOnHands: {
      auto& a = s.combatants[actor];
      const auto t = o.targets[0];
      const int missing = s.combatants[t].base->hp_max - s.combatants[t].hp_current;
      const int amount = std::min(a.lay_on_hands_pool, missing);
      a.lay_on_hands_pool -= amount;
      const int healed = apply_heal(s, t, amount);
      if (s.logging()) s.emit({s.round, a.id, "lay_on_hands", {s.combatants[t].id}, {}, -healed, {}});
      return;
    }
    case OptionKind::SecondWind: {
      auto& a = s.combatants[actor];
      --a.second_wind_uses;
      const int healed = apply_heal(s, actor, rng.between(1, 10) + a.base->level);
      if (s.logging()) s.emit({s.round, a.id, "second_wind", {a.id}, {}, -healed, {}});
      return;
    }
    case OptionKind::Rage: {
      auto& a = s.combatants[actor];
      --a.rage_uses;
      a.add_condition(Condition::Raging, 10);
      if (s.logging()) s.emit({s.round, a.id, "rage", {a.id}, {}, 0, {}});
      return;
    }
  }
}

/// Winner if the fight is decided, nullopt while both sides have someone standing.
inline std::optional<Winner> decided(const CombatState& s) {
  if (!any_active(s, Side::Enemy)) return Winner::Party;
  if (!any_active(s, Side::Party)) return Winner::Enemy;
  return std::nullopt;
}

/// Plays one combatant's turn: death save when unconscious, otherwise repeatedly
/// performs the highest positive-utility option until the action economy is
/// spent or nothing is worth doing. Returns the events produced (when logging).
inline std::vector<CombatEvent> take_turn(CombatState& s, std::size_t actor, RngStream& rng) {
  const std::size_t log_begin = s.log.size();
  auto& c = s.combatants[actor];
  if (c.life_state == LifeState::Unconscious) {
    const int d = rng.d20();
    apply_death_save(c, d);
    if (s.logging())
      s.emit({s.round, c.id, "death_save", {}, {d}, 0, std::string(kLifeStateTags[static_cast<std::size_t>(c.life_state)])});
  } else if (c.active()) {
    c.conditions[static_cast<std::size_t>(Condition::Dodging)] = 0;
    c.reaction_used = false;
    c.sneak_used = false;
    if (c.base->traits.regeneration > 0 && !c.took_fire_or_acid && c.hp_current < c.base->hp_max) {
      const int healed = apply_heal(s, actor, c.base->traits.regeneration);
      if (s.logging()) s.emit({s.round, c.id, "regenerate", {c.id}, {}, -healed, {}});
    }
    c.took_fire_or_acid = false;

    Economy econ;
    econ.haste_attack = c.has(Condition::Hasted);
    bool used_action = false;
    const double jitter = s.options.utility.jitter;
    while (!decided(s) && s.combatants[actor].active() && (econ.action || econ.bonus || econ.haste_attack)) {
      const auto options = enumerate_options(s, actor, econ);
      double best = 0.0;
      std::optional<std::size_t> pick;
      for (std::size_t i = 0; i < options.size(); ++i) {
        const double base = score_action(s, actor, options[i]);
        if (base <= 0.0) continue;
        const double jittered = base * (1.0 + jitter * (2.0 * rng.uniform() - 1.0));
        if (!pick || jittered > best) {
          best = jittered;
          pick = i;
        }
      }
      if (!pick) break;
      const auto& o = options[*pick];
      if (o.haste_attack) econ.haste_attack = false;
      else if (o.cost == ActionCost::Action) econ.action = false;
      else econ.bonus = false;
      if (o.cost == ActionCost::Action && !o.haste_attack) used_action = true;
      execute_action(s, actor, o, rng);
      auto& self = s.combatants[actor];
      if (!econ.action && o.cost == ActionCost::Action && !o.haste_attack && self.action_surge_uses > 0 &&
          self.active() && !decided(s)) {
        --self.action_surge_uses;
        econ.action = true;
        if (s.logging()) s.emit({s.round, self.id, "action_surge", {}, {}, 0, {}});
      }
    }
    auto& self = s.combatants[actor];
    if (!used_action && self.active() && !decided(s)) {
      self.add_condition(Condition::Dodging, 1);
      if (s.logging()) s.emit({s.round, self.id, "dodge", {}, {}, 0, {}});
    }
  }
  auto& self = s.combatants[actor];
  for (std::size_t k = 0; k < kConditionCount; ++k)
    if (k != static_cast<std::size_t>(Condition::Dodging) && self.conditions[k] > 0) --self.conditions[k];
  if (!s.logging()) return {};
  return {s.log.begin() + static_cast<std::ptrdiff_t>(log_begin), s.log.end()};
}

/// Sets up the state, rolls initiative (d20 + bonus; ties: higher DEX, then
/// roster order with the party side first).
inline CombatState start_combat(const std::vector<RosterEntry>& party_side, const std::vector<RosterEntry>& enemy_side,
                                const ContentPack& pack, const CombatOptions& options, RngStream& rng) {
  CombatState s;
  s.pack = &pack;
  s.options = options;
  s.combatants.reserve(party_side.size() + enemy_side.size() + 16);
  for (std::size_t i = 0; i < party_side.size(); ++i) {
    const auto& e = party_side[i];
    s.combatants.push_back(make_combatant(*e.block, e.hp_current, Side::Party, "p" + std::to_string(i) + ":" + e.block->id));
  }
  for (std::size_t i = 0; i < enemy_side.size(); ++i) {
    const auto& e = enemy_side[i];
    s.combatants.push_back(make_combatant(*e.block, e.hp_current, Side::Enemy, "e" + std::to_string(i) + ":" + e.block->id));
  }
  s.original_party = party_side.size();
  for (std::size_t i = 0; i < s.combatants.size(); ++i) {
    auto& c = s.combatants[i];
    c.roster_index = i;
    const int d = rng.d20();
    c.initiative_roll = d + c.base->initiative_bonus;
    if (s.logging()) s.emit({0, c.id, "initiative", {}, {d, c.initiative_roll}, 0, {}});
    s.order.push_back(i);
  }
  std::stable_sort(s.order.begin(), s.order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = s.combatants[x];
    const auto& b = s.combatants[y];
    if (a.initiative_roll != b.initiative_roll) return a.initiative_roll > b.initiative_roll;
    const int da = a.base->abilities.score(Ability::Dex), db = b.base->abilities.score(Ability::Dex);
    if (da != db) return da > db;
    return a.roster_index < b.roster_index;
  });
  return s;
}

inline CombatResult finish_combat(CombatState& s, Winner winner) {
  CombatResult r;
  r.winner = winner;
  r.rounds = s.round;
  r.tpk = winner == Winner::Enemy;
  r.damage_to_party = s.damage_to_party;
  long long hp = 0, hp_max = 0;
  for (std::size_t i = 0; i < s.original_party; ++i) {
    const auto& c = s.combatants[i];
    r.hp_start.push_back(c.hp_start);
    r.hp_end.push_back(c.hp_current);
    r.healing_received.push_back(c.healing_received);
    r.final_states.push_back(c.life_state);
    if (c.life_state == LifeState::Dead) ++r.party_deaths;
    hp += c.hp_current;
    hp_max += c.base->hp_max;
  }
  r.remaining_party_hp_fraction = hp_max > 0 ? static_cast<double>(hp) / static_cast<double>(hp_max) : 0.0;
  if (s.logging()) s.emit({s.round, "", "end", {}, {}, 0, std::string(kWinnerTags[static_cast<std::size_t>(winner)])});
  r.log = std::move(s.log);
  return r;
}

/// Fights arbitrary rosters to completion (or the round cap, a DRAW).
inline CombatResult run_combat(const std::vector<RosterEntry>& party_side, const std::vector<RosterEntry>& enemy_side,
                               const ContentPack& pack, std::uint64_t seed, const CombatOptions& options = {}) {
  RngStream rng(seed);
  auto s = start_combat(party_side, enemy_side, pack, options, rng);
  if (auto w = decided(s)) return finish_combat(s, *w);
  while (s.round < options.round_cap) {
    ++s.round;
    for (std::size_t pos = 0; pos < s.order.size(); ++pos) {
      take_turn(s, s.order[pos], rng);
      if (auto w = decided(s)) return finish_combat(s, *w);
    }
  }
  return finish_combat(s, Winner::Draw);
}

inline std::vector<RosterEntry> party_roster(const Party& party, const ContentPack& pack) {
  std::vector<RosterEntry> out;
  for (const auto& m : party.members) out.push_back({&pack.pc_templates.at(m.template_index), m.hp_current});
  return out;
}

inline std::vector<RosterEntry> encounter_roster(const Encounter& e, const ContentPack& pack) {
  std::vector<RosterEntry> out;
  for (auto i : e.enemies) out.push_back({&pack.monsters.at(i), pack.monsters.at(i).hp_max});
  return out;
}

inline CombatResult run_combat(const Party& party, const Encounter& encounter, const ContentPack& pack,
                               std::uint64_t seed, const CombatOptions& options = {}) {
  validate_party(party, pack);
  validate_encounter(encounter, pack);
  return run_combat(party_roster(party, pack), encounter_roster(encounter, pack), pack, seed, options);
}

}  // namespace ntrl
