#pragma once

#include <cstdlib>
#include <functional>
#include <optional>
#include <vector>

#include "ntrl/policies/generation.hpp"
#include "ntrl/sim/batch.hpp"
#include "ntrl/training/party_gen.hpp"

namespace ntrl {

using EncounterPolicy = std::function<EncounterProposal(const GenerationContext&)>;

struct PartyEvaluation {
  std::string party_digest;
  EncounterProposal proposal;
  BatchMetrics metrics;
};

/// Means over evaluated batches. tpk_count and total_player_deaths are per batch.
struct PolicySummary {
  double win_probability = 0.0;
  double fight_longevity = 0.0;
  double tpk_count = 0.0;
  double tpk_rate = 0.0;
  double team_xp_difference = 0.0;
  double mean_abs_xp_difference = 0.0;
  double mean_budget = 0.0;
  double remaining_party_hp_pct = 0.0;
  double total_damage_to_party = 0.0;
  double total_player_deaths = 0.0;
  int n_batches = 0;
  int n_sims = 0;
};

inline ordered_json to_json(const PolicySummary& s) {
  ordered_json j;
  j["win_probability"] = s.win_probability;
  j["fight_longevity"] = s.fight_longevity;
  j["tpk_count"] = s.tpk_count;
  j["tpk_rate"] = s.tpk_rate;
  j["team_xp_difference"] = s.team_xp_difference;
  j["mean_abs_xp_difference"] = s.mean_abs_xp_difference;
  j["mean_budget"] = s.mean_budget;
  j["remaining_party_hp_pct"] = s.remaining_party_hp_pct;
  j["total_damage_to_party"] = s.total_damage_to_party;
  j["total_player_deaths"] = s.total_player_deaths;
  j["n_batches"] = s.n_batches;
  j["n_sims"] = s.n_sims;
  return j;
}

/// `budgets` pairs with `batches` and feeds mean_budget; may be empty.
inline PolicySummary summarize(std::span<const BatchMetrics> batches, std::span<const long long> budgets = {}) {
  PolicySummary s;
  s.n_batches = static_cast<int>(batches.size());
  if (batches.empty()) return s;
  long long sims = 0, tpks = 0;
  for (const auto& b : batches) {
    s.win_probability += b.win_probability;
    s.fight_longevity += b.fight_longevity;
    s.tpk_count += b.tpk_count;
    s.team_xp_difference += static_cast<double>(b.team_xp_difference);
    s.mean_abs_xp_difference += static_cast<double>(std::llabs(b.team_xp_difference));
    s.remaining_party_hp_pct += b.remaining_party_hp_pct;
    s.total_damage_to_party += b.total_damage_to_party;
    s.total_player_deaths += b.total_player_deaths;
    sims += b.n_sims;
    tpks += b.tpk_count;
  }
  for (auto b : budgets) s.mean_budget += static_cast<double>(b);
  const double n = static_cast<double>(batches.size());
  s.win_probability /= n;
  s.fight_longevity /= n;
  s.tpk_count /= n;
  s.team_xp_difference /= n;
  s.mean_abs_xp_difference /= n;
  s.remaining_party_hp_pct /= n;
  s.total_damage_to_party /= n;
  s.total_player_deaths /= n;
  if (!budgets.empty()) s.mean_budget /= static_cast<double>(budgets.size());
  s.n_sims = static_cast<int>(sims);
  s.tpk_rate = sims > 0 ? static_cast<double>(tpks) / static_cast<double>(sims) : 0.0;
  return s;
}

struct EvaluationOptions {
  Tier tier = Tier::Deadly;
  /// nullopt evaluates every party at full HP.
  std::optional<HpVariationConfig> hp_variation = HpVariationConfig{};
  BatchOptions batch{};
};

struct EvaluationReport {
  std::vector<PartyEvaluation> parties;
  PolicySummary summary;
};

/// Runs `policy` on n_parties procedurally generated parties. Party i depends
/// only on (base_seed, i), so two policies evaluated with the same seed face
/// the same parties and the same per-simulation seeds.
inline EvaluationReport evaluate_policy(const EncounterPolicy& policy, const ContentPack& pack, int n_parties,
                                        int n_sims, std::uint64_t base_seed, const EvaluationOptions& options = {}) {
  if (n_parties < 1) throw Error(ErrorCode::InvalidConfig, "n_parties must be >= 1", "n_parties");
  if (n_sims < 1) throw Error(ErrorCode::InvalidConfig, "n_sims must be >= 1", "n_sims");
  EvaluationReport report;
  std::vector<BatchMetrics> batches;
  std::vector<long long> budgets;
  auto batch_options = options.batch;
  batch_options.tier = options.tier;
  for (int i = 0; i < n_parties; ++i) {
    const auto index = static_cast<std::size_t>(i);
    const auto party = paired_party(pack, base_seed, index, options.hp_variation);
    const RngStream root(mix_seed(base_seed, index));
    auto policy_rng = root.split("policy");
    const GenerationContext ctx{party, pack, policy_rng, options.tier};
    auto proposal = policy(ctx);
    const auto metrics =
        run_batch(party, proposal.encounter, n_sims, root.split("sims").seed(), pack, batch_options);
    budgets.push_back(proposal.budget.total);
    batches.push_back(metrics);
    report.parties.push_back({party_digest(party, pack), std::move(proposal), metrics});
  }
  report.summary = summarize(batches, budgets);
  return report;
}

}  // namespace ntrl
