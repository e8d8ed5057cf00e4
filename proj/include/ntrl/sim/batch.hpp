#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "ntrl/content/xp.hpp"
#include "ntrl/sim/combat.hpp"

namespace ntrl {

/// Aggregate of N simulations of one (party, encounter) pair.
struct BatchMetrics {
  double win_probability = 0.0;
  double fight_longevity = 0.0;
  int tpk_count = 0;
  long long team_xp_difference = 0;
  double remaining_party_hp_pct = 0.0;
  double total_damage_to_party = 0.0;
  int total_player_deaths = 0;
  int n_sims = 0;
  /// Fights stopped by the round cap. Kept out of the JSON form.
  int draw_count = 0;
};

inline ordered_json to_json(const BatchMetrics& m) {
  ordered_json j;
  j["win_probability"] = m.win_probability;
  j["fight_longevity"] = m.fight_longevity;
  j["tpk_count"] = m.tpk_count;
  j["team_xp_difference"] = m.team_xp_difference;
  j["remaining_party_hp_pct"] = m.remaining_party_hp_pct;
  j["total_damage_to_party"] = m.total_damage_to_party;
  j["total_player_deaths"] = m.total_player_deaths;
  j["n_sims"] = m.n_sims;
  return j;
}

inline BatchMetrics batch_metrics_from_json(const json& j) {
  BatchMetrics m;
  m.win_probability = j.at("win_probability").get<double>();
  m.fight_longevity = j.at("fight_longevity").get<double>();
  m.tpk_count = j.at("tpk_count").get<int>();
  m.team_xp_difference = j.at("team_xp_difference").get<long long>();
  m.remaining_party_hp_pct = j.at("remaining_party_hp_pct").get<double>();
  m.total_damage_to_party = j.at("total_damage_to_party").get<double>();
  m.total_player_deaths = j.at("total_player_deaths").get<int>();
  m.n_sims = j.at("n_sims").get<int>();
  return m;
}

/// Folds per-simulation results in index order, so the outcome does not
/// depend on which worker finished first.
inline BatchMetrics aggregate_results(std::span<const CombatResult> results, long long team_xp_difference) {
  BatchMetrics m;
  m.n_sims = static_cast<int>(results.size());
  m.team_xp_difference = team_xp_difference;
  if (results.empty()) return m;
  long long wins = 0, rounds = 0, damage = 0;
  double hp = 0.0;
  for (const auto& r : results) {
    wins += r.winner == Winner::Party;
    m.draw_count += r.winner == Winner::Draw;
    m.tpk_count += r.tpk;
    rounds += r.rounds;
    damage += r.damage_to_party;
    hp += r.remaining_party_hp_fraction;
    m.total_player_deaths += r.party_deaths;
  }
  const double n = static_cast<double>(results.size());
  m.win_probability = static_cast<double>(wins) / n;
  m.fight_longevity = static_cast<double>(rounds) / n;
  m.total_damage_to_party = static_cast<double>(damage) / n;
  m.remaining_party_hp_pct = 100.0 * hp / n;
  return m;
}

struct BatchOptions {
  /// Tier of the budget that team_xp_difference is measured against.
  Tier tier = Tier::Deadly;
  /// 1 runs inline; larger values split simulations across worker threads.
  unsigned threads = 1;
  CombatOptions combat{};
};

/// Per-simulation seed: a stable mix of the batch seed and the simulation index.
inline std::uint64_t sim_seed(std::uint64_t base_seed, std::size_t index) noexcept {
  return mix_seed(base_seed, static_cast<std::uint64_t>(index));
}

/// Budget minus adjusted encounter XP, signed. Positive means the encounter
/// is cheaper than the budget.
inline long long team_xp_difference(const Party& party, const Encounter& encounter, Tier tier,
                                    const ContentPack& pack) {
  return party_xp_budget(party, tier, pack).total - adjusted_encounter_xp(encounter, pack);
}

inline BatchMetrics run_batch(const Party& party, const Encounter& encounter, int n_sims, std::uint64_t base_seed,
                              const ContentPack& pack, const BatchOptions& options = {}) {
  if (n_sims < 1) throw Error(ErrorCode::InvalidConfig, "n_sims must be >= 1", "n_sims");
  validate_party(party, pack);
  validate_encounter(encounter, pack);
  const auto party_side = party_roster(party, pack);
  const auto enemy_side = encounter_roster(encounter, pack);
  std::vector<CombatResult> results(static_cast<std::size_t>(n_sims));
  const auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < results.size(); i += stride)
      results[i] = run_combat(party_side, enemy_side, pack, sim_seed(base_seed, i), options.combat);
  };
  const unsigned threads = std::min<unsigned>(std::max(1u, options.threads), static_cast<unsigned>(n_sims));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  return aggregate_results(results, team_xp_difference(party, encounter, options.tier, pack));
}

}  // namespace ntrl
