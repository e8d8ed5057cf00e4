#pragma once

#include <json.hpp>

#include "ntrl/error.hpp"

namespace ntrl {

/// Weights behind the combat AI's action scores. Bump `version` whenever a
/// default changes; simulation results are only comparable within a version.
///
///   attack / damage spell : P(hit) * mean damage (+ kill_bonus if the mean
///                           would drop the target) - slot_cost_per_level * slot
///   heal                  : heal_weight * min(mean heal, missing HP)
///                           (+ downed_ally_bonus when the ally is at 0 HP);
///                           conscious allies only below heal_threshold HP
///   bless / haste / mark  : flat per-target values below
///   control spell         : condition_weight * P(failed save) * target threat
///   summon                : summon_value per creature
///
/// Every positive score is multiplied by (1 + u), u ~ U(-jitter, +jitter).
struct UtilityTable {
  int version = 1;
  double kill_bonus = 4.0;
  double heal_weight = 1.0;
  double heal_threshold = 0.5;
  double downed_ally_bonus = 30.0;
  double bless_value = 2.0;
  double haste_value = 7.0;
  double empowered_value = 5.0;
  double rage_value = 6.0;
  double condition_weight = 0.5;
  double summon_value = 7.0;
  double slot_cost_per_level = 1.5;
  double jitter = 0.10;

  friend bool operator==(const UtilityTable&, const UtilityTable&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(UtilityTable, version, kill_bonus, heal_weight, heal_threshold,
                                                downed_ally_bonus, bless_value, haste_value, empowered_value,
                                                rage_value, condition_weight, summon_value, slot_cost_per_level,
                                                jitter)

}  // namespace ntrl
