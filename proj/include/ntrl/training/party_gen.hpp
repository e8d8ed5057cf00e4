#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ntrl/sim/rng.hpp"
#include "ntrl/sim/roster.hpp"

namespace ntrl {

/// Fraction-of-max HP levels a generated party may start a fight at.
inline constexpr std::array<double, 7> kHpThresholds = {1.00, 0.75, 0.50, 0.40, 0.30, 0.20, 0.10};

struct HpVariationConfig {
  std::vector<double> thresholds{kHpThresholds.begin(), kHpThresholds.end()};
  double noise = 0.05;
  int floor = 1;
};

inline ordered_json to_json(const HpVariationConfig& c) {
  return ordered_json{{"thresholds", c.thresholds}, {"noise", c.noise}, {"floor", c.floor}};
}

inline HpVariationConfig hp_variation_from_json(const json& j) {
  HpVariationConfig c;
  c.thresholds = j.value("thresholds", c.thresholds);
  c.noise = j.value("noise", c.noise);
  c.floor = j.value("floor", c.floor);
  if (c.thresholds.empty()) throw Error(ErrorCode::InvalidConfig, "thresholds must not be empty", "hp_variation.thresholds");
  for (double t : c.thresholds)
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidConfig, "threshold outside (0, 1]", "hp_variation.thresholds");
  if (!(c.noise >= 0.0 && c.noise < 1.0)) throw Error(ErrorCode::InvalidConfig, "noise outside [0, 1)", "hp_variation.noise");
  if (c.floor < 1) throw Error(ErrorCode::InvalidConfig, "floor must be >= 1", "hp_variation.floor");
  return c;
}

/// Party of uniform size in [3, 8]; members drawn uniformly with repetition
/// from the PC templates, at full HP.
inline Party generate_party(const ContentPack& pack, RngStream& rng) {
  const int n = rng.between(static_cast<int>(kMinPartySize), static_cast<int>(kMaxPartySize));
  Party party;
  for (int i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(rng.below(pack.pc_templates.size()));
    party.members.push_back({t, pack.pc_templates[t].hp_max});
  }
  return party;
}

inline int varied_hp(int hp_max, double threshold, double u, int floor = 1) {
  const auto hp = static_cast<int>(std::lround(hp_max * threshold * (1.0 + u)));
  return std::clamp(hp, std::min(floor, hp_max), hp_max);
}

/// HP variation with the threshold and per-member noise supplied by the caller.
inline Party apply_hp_variation_forced(const Party& party, const ContentPack& pack, double threshold,
                                       std::span<const double> noise, int floor = 1) {
  Party out = party;
  for (std::size_t i = 0; i < out.members.size(); ++i) {
    const int hp_max = pack.pc_templates.at(out.members[i].template_index).hp_max;
    out.members[i].hp_current = varied_hp(hp_max, threshold, i < noise.size() ? noise[i] : 0.0, floor);
  }
  return out;
}

/// One threshold per party, then per-member multiplicative noise in
/// [-noise, +noise]. Each member ends in [floor, hp_max].
inline Party apply_hp_variation(const Party& party, const ContentPack& pack, const HpVariationConfig& cfg,
                                RngStream& rng, double* threshold_out = nullptr) {
  const double threshold = cfg.thresholds[static_cast<std::size_t>(rng.below(cfg.thresholds.size()))];
  std::vector<double> noise;
  for (std::size_t i = 0; i < party.members.size(); ++i) noise.push_back(rng.uniform(-cfg.noise, cfg.noise));
  if (threshold_out) *threshold_out = threshold;
  return apply_hp_variation_forced(party, pack, threshold, noise, cfg.floor);
}

/// The party used at index `index` of a paired run: same (seed, index) gives
/// the same party for every policy under evaluation.
inline Party paired_party(const ContentPack& pack, std::uint64_t base_seed, std::size_t index,
                          const std::optional<HpVariationConfig>& hp_variation) {
  const RngStream root(mix_seed(base_seed, index));
  auto party_rng = root.split("party");
  auto party = generate_party(pack, party_rng);
  if (hp_variation) {
    auto hp_rng = root.split("hp");
    party = apply_hp_variation(party, pack, *hp_variation, hp_rng);
  }
  return party;
}

}  // namespace ntrl
