#pragma once

#include <algorithm>
#include <string>

#include "ntrl/sim/batch.hpp"

namespace ntrl {

/// Coefficients of the encounter reward
///
///   R = alpha*wp + beta*min(fl, longevity_cap) + gamma*mhp + delta*dmg
///       + lambda*dth + tpk_penalty*tpk_count
///
/// with wp the win probability, fl the mean rounds, mhp the missing-HP
/// fraction at fight end, dmg the mean damage taken, dth the summed PC deaths.
/// reward_scale only divides the advantage inside the gradient update.
struct RewardConfig {
  double alpha = 1000.0;
  double beta = 25.0;
  double longevity_cap = 20.0;
  double gamma = 500.0;
  double delta = 10.0;
  double lambda = 0.5;
  double tpk_penalty = -20.0;
  double reward_scale = 1000.0;
  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

inline ordered_json to_json(const RewardConfig& c) {
  ordered_json j;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["longevity_cap"] = c.longevity_cap;
  j["gamma"] = c.gamma;
  j["delta"] = c.delta;
  j["lambda"] = c.lambda;
  j["tpk_penalty"] = c.tpk_penalty;
  j["reward_scale"] = c.reward_scale;
  return j;
}

inline RewardConfig reward_config_from_json(const json& j) {
  RewardConfig c;
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.longevity_cap = j.value("longevity_cap", c.longevity_cap);
  c.gamma = j.value("gamma", c.gamma);
  c.delta = j.value("delta", c.delta);
  c.lambda = j.value("lambda", c.lambda);
  c.tpk_penalty = j.value("tpk_penalty", c.tpk_penalty);
  c.reward_scale = j.value("reward_scale", c.reward_scale);
  if (!(c.alpha > 0.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be > 0", "reward.alpha");
  if (!(c.tpk_penalty <= 0.0)) throw Error(ErrorCode::InvalidConfig, "tpk_penalty must be <= 0", "reward.tpk_penalty");
  if (!(c.reward_scale > 0.0)) throw Error(ErrorCode::InvalidConfig, "reward_scale must be > 0", "reward.reward_scale");
  if (!(c.longevity_cap > 0.0)) throw Error(ErrorCode::InvalidConfig, "longevity_cap must be > 0", "reward.longevity_cap");
  return c;
}

/// Stable digest of a reward configuration, stored in checkpoints.
inline std::string reward_config_hash(const RewardConfig& c) { return hex64(fnv1a64(to_json(c).dump())); }

inline double compute_reward(const BatchMetrics& m, const RewardConfig& c) {
  const double mhp = 1.0 - m.remaining_party_hp_pct / 100.0;
  return c.alpha * m.win_probability + c.beta * std::min(m.fight_longevity, c.longevity_cap) + c.gamma * mhp +
         c.delta * m.total_damage_to_party + c.lambda * m.total_player_deaths + c.tpk_penalty * m.tpk_count;
}

}  // namespace ntrl
