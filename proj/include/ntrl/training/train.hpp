#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ntrl/policies/evaluation.hpp"
#include "ntrl/policy/checkpoint.hpp"
#include "ntrl/training/party_gen.hpp"
#include "ntrl/training/reinforce.hpp"
#include "ntrl/training/reward.hpp"

namespace ntrl {

struct TrainConfig {
  int steps = 10000;
  int sims_per_step = 100;
  int seeds = 5;
  /// Seed of run k is base_seed + k.
  std::uint64_t base_seed = 0;
  nn::AdamConfig optimizer{};
  bool baseline = true;
  std::size_t baseline_window = 100;
  Tier tier = Tier::Deadly;
  /// Also simulate the DM heuristic on every step's party, for paired comparison.
  bool paired_dm = true;
  /// 0 disables periodic checkpoints; a final checkpoint is always written when out_dir is set.
  int checkpoint_every = 1000;
  /// Single-threaded and no wall-clock fields, so logs are byte-reproducible.
  bool strict = true;
  unsigned threads = 1;
  std::string pack_path;
  std::string out_dir;
};

/// Network sizes that may be changed from the experiment file; the
/// vocabularies always come from the content pack.
struct NetworkDims {
  std::size_t hidden = 128;
  std::size_t class_embedding = 16;
  std::size_t group_embedding = 8;
  std::size_t synergy_embedding = 32;
};

/// Everything that determines a training run, serialised as one JSON file
/// whose digest is embedded in every checkpoint.
struct ExperimentConfig {
  TrainConfig train{};
  RewardConfig reward{};
  HpVariationConfig hp_variation{};
  UtilityTable utility{};
  NetworkDims network{};
};

inline ordered_json to_json(const ExperimentConfig& e) {
  const auto& t = e.train;
  ordered_json train;
  train["steps"] = t.steps;
  train["sims_per_step"] = t.sims_per_step;
  train["seeds"] = t.seeds;
  train["base_seed"] = t.base_seed;
  train["optimizer"] = nn::to_json(t.optimizer);
  train["baseline"] = t.baseline;
  train["baseline_window"] = t.baseline_window;
  train["tier"] = tier_name(t.tier);
  train["paired_dm"] = t.paired_dm;
  train["checkpoint_every"] = t.checkpoint_every;
  train["strict"] = t.strict;
  train["threads"] = t.threads;
  train["pack_path"] = t.pack_path;
  train["out_dir"] = t.out_dir;
  ordered_json j;
  j["train"] = train;
  j["reward"] = to_json(e.reward);
  j["hp_variation"] = to_json(e.hp_variation);
  j["utility"] = ordered_json(json(e.utility));
  j["network"] = ordered_json{{"hidden", e.network.hidden},
                              {"class_embedding", e.network.class_embedding},
                              {"group_embedding", e.network.group_embedding},
                              {"synergy_embedding", e.network.synergy_embedding}};
  return j;
}

inline ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig e;
  if (j.contains("train")) {
    const auto& t = j.at("train");
    auto& c = e.train;
    c.steps = t.value("steps", c.steps);
    c.sims_per_step = t.value("sims_per_step", c.sims_per_step);
    c.seeds = t.value("seeds", c.seeds);
    c.base_seed = t.value("base_seed", c.base_seed);
    if (t.contains("optimizer")) c.optimizer = nn::adam_from_json(t.at("optimizer"));
    c.baseline = t.value("baseline", c.baseline);
    c.baseline_window = t.value("baseline_window", c.baseline_window);
    if (t.contains("tier")) c.tier = parse_tier(t.at("tier").get<std::string>());
    c.paired_dm = t.value("paired_dm", c.paired_dm);
    c.checkpoint_every = t.value("checkpoint_every", c.checkpoint_every);
    c.strict = t.value("strict", c.strict);
    c.threads = t.value("threads", c.threads);
    c.pack_path = t.value("pack_path", c.pack_path);
    c.out_dir = t.value("out_dir", c.out_dir);
  }
  if (j.contains("reward")) e.reward = reward_config_from_json(j.at("reward"));
  if (j.contains("hp_variation")) e.hp_variation = hp_variation_from_json(j.at("hp_variation"));
  if (j.contains("utility")) e.utility = j.at("utility").get<UtilityTable>();
  if (j.contains("network")) {
    const auto& n = j.at("network");
    e.network.hidden = n.value("hidden", e.network.hidden);
    e.network.class_embedding = n.value("class_embedding", e.network.class_embedding);
    e.network.group_embedding = n.value("group_embedding", e.network.group_embedding);
    e.network.synergy_embedding = n.value("synergy_embedding", e.network.synergy_embedding);
  }
  const auto& c = e.train;
  if (c.steps < 1) throw Error(ErrorCode::InvalidConfig, "steps must be >= 1", "train.steps");
  if (c.sims_per_step < 1) throw Error(ErrorCode::InvalidConfig, "sims_per_step must be >= 1", "train.sims_per_step");
  if (c.seeds < 1) throw Error(ErrorCode::InvalidConfig, "seeds must be >= 1", "train.seeds");
  if (c.baseline_window < 1) throw Error(ErrorCode::InvalidConfig, "baseline_window must be >= 1", "train.baseline_window");
  return e;
}

inline std::string experiment_digest(const ExperimentConfig& e) { return hex64(fnv1a64(to_json(e).dump())); }

inline ArchitectureConfig architecture_for(const ContentPack& pack, const NetworkDims& dims) {
  auto a = ArchitectureConfig::from_pack(pack);
  a.hidden = dims.hidden;
  a.class_embedding = dims.class_embedding;
  a.group_embedding = dims.group_embedding;
  a.synergy_embedding = dims.synergy_embedding;
  return a;
}

/// One training step's provenance.
struct TrainStepRecord {
  std::uint64_t seed = 0;
  int step = 0;
  std::string party_digest;
  Party party;
  Encounter encounter;
  BatchMetrics metrics;
  double reward = 0.0;
  double loss = 0.0;
  double baseline = 0.0;
  std::optional<Encounter> dm_encounter;
  std::optional<BatchMetrics> dm_metrics;
  std::optional<double> dm_reward;
  std::optional<Error> error;
  std::optional<double> wall_clock_ms;
};

inline ordered_json to_json(const TrainStepRecord& r, const ContentPack& pack) {
  ordered_json j;
  j["seed"] = r.seed;
  j["step"] = r.step;
  j["party_digest"] = r.party_digest;
  j["party"] = party_to_json(r.party, pack);
  if (r.error) {
    j["error"] = ordered_json{{"code", to_string(r.error->code())}, {"message", r.error->message()}};
  } else {
    j["encounter"] = encounter_to_json(r.encounter, pack);
    j["metrics"] = to_json(r.metrics);
    j["draws"] = r.metrics.draw_count;
    j["reward"] = r.reward;
    j["loss"] = r.loss;
    j["baseline"] = r.baseline;
    if (r.dm_metrics) {
      j["dm"] = ordered_json{{"encounter", encounter_to_json(*r.dm_encounter, pack)},
                             {"metrics", to_json(*r.dm_metrics)},
                             {"reward", *r.dm_reward}};
    }
  }
  if (r.wall_clock_ms) j["wall_clock_ms"] = *r.wall_clock_ms;
  return j;
}

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<TrainStepRecord> records;
  std::vector<std::filesystem::path> checkpoints;
  Checkpoint final_checkpoint;
};

struct TrainResult {
  std::vector<SeedRun> runs;
};

/// Fixed-budget DM proposals, memoised per budget (it only depends on party size here).
class DmCache {
 public:
  const Encounter& get(const Party& party, Tier tier, const ContentPack& pack) {
    const auto budget = party_xp_budget(party, tier, pack).total;
    auto it = cache_.find(budget);
    if (it == cache_.end()) it = cache_.emplace(budget, dm_encounter_for_budget(budget, pack)).first;
    return it->second;
  }

 private:
  std::map<long long, Encounter> cache_;
};

using StepCallback = std::function<void(const TrainStepRecord&)>;

/// Trains one seed. Each step: generate a party, vary its HP, sample an
/// encounter, simulate, score, and update the policy. Step t depends only on
/// (seed, t) and the parameters, so reruns reproduce the log exactly.
inline SeedRun train_seed(const ExperimentConfig& exp, const ContentPack& pack, std::uint64_t seed,
                          const StepCallback& on_step = {}) {
  const auto& cfg = exp.train;
  SeedRun run;
  run.seed = seed;
  PolicyNetworkF net(architecture_for(pack, exp.network), mix_seed(seed, fnv1a64("init")));
  nn::Adam<float> optimizer(net.param_count(), cfg.optimizer);
  RunningBaseline baseline(cfg.baseline_window);
  ReinforceConfig rcfg{cfg.optimizer, cfg.baseline, cfg.baseline_window, exp.reward.reward_scale};
  BatchOptions batch;
  batch.tier = cfg.tier;
  batch.threads = cfg.strict ? 1 : std::max(1u, cfg.threads);
  batch.combat.utility = exp.utility;
  DmCache dm_cache;
  const auto digest = experiment_digest(exp);
  const auto reward_hash = reward_config_hash(exp.reward);

  std::optional<std::ofstream> log;
  std::filesystem::path dir;
  if (!cfg.out_dir.empty()) {
    dir = std::filesystem::path(cfg.out_dir) / ("seed_" + std::to_string(seed));
    std::filesystem::create_directories(dir);
    log.emplace(dir / "train_log.jsonl", std::ios::trunc);
    if (!*log) throw Error(ErrorCode::Io, "cannot write training log in " + dir.string(), "out_dir");
  }
  const auto write_checkpoint = [&](int step, const std::string& name) {
    auto ckpt = make_checkpoint(net, step, seed, reward_hash, digest);
    if (!dir.empty()) {
      save_checkpoint(ckpt, dir / name);
      run.checkpoints.push_back(dir / name);
    }
    return ckpt;
  };

  for (int step = 0; step < cfg.steps; ++step) {
    const auto started = std::chrono::steady_clock::now();
    const RngStream root(mix_seed(seed, static_cast<std::uint64_t>(step)));
    TrainStepRecord rec;
    rec.seed = seed;
    rec.step = step;
    auto party_rng = root.split("party");
    auto hp_rng = root.split("hp");
    rec.party = apply_hp_variation(generate_party(pack, party_rng), pack, exp.hp_variation, hp_rng);
    rec.party_digest = party_digest(rec.party, pack);
    try {
      ReinforceRecord rr;
      rr.features = encode_party(rec.party, pack, net.arch());
      auto policy_rng = root.split("policy");
      auto [encounter, trace] = sample_encounter(net, rr.features, policy_rng);
      rec.encounter = std::move(encounter);
      rr.trace = std::move(trace);
      const auto sims_seed = root.split("sims").seed();
      rec.metrics = run_batch(rec.party, rec.encounter, cfg.sims_per_step, sims_seed, pack, batch);
      rec.reward = compute_reward(rec.metrics, exp.reward);
      rr.reward = rec.reward;
      if (cfg.paired_dm) {
        rec.dm_encounter = dm_cache.get(rec.party, cfg.tier, pack);
        rec.dm_metrics = run_batch(rec.party, *rec.dm_encounter, cfg.sims_per_step, sims_seed, pack, batch);
        rec.dm_reward = compute_reward(*rec.dm_metrics, exp.reward);
      }
      const auto result = reinforce_step(net, std::span<const ReinforceRecord>(&rr, 1), optimizer, baseline, rcfg);
      rec.loss = result.loss;
      rec.baseline = result.baseline;
    } catch (const Error& e) {
      rec.error = e;
    }
    if (!cfg.strict)
      rec.wall_clock_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    if (log) *log << to_json(rec, pack).dump() << '\n';
    if (on_step) on_step(rec);
    run.records.push_back(std::move(rec));
    if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 && step + 1 < cfg.steps)
      write_checkpoint(step + 1, "ckpt_step" + std::to_string(step + 1) + ".ntrl");
  }
  run.final_checkpoint = write_checkpoint(cfg.steps, "final.ntrl");
  return run;
}

inline TrainResult train(const ExperimentConfig& exp, const ContentPack& pack, const StepCallback& on_step = {}) {
  TrainResult result;
  for (int k = 0; k < exp.train.seeds; ++k)
    result.runs.push_back(train_seed(exp, pack, exp.train.base_seed + static_cast<std::uint64_t>(k), on_step));
  return result;
}

/// Encounter policy backed by a trained network.
template <class T>
EncounterPolicy ntrl_policy(std::shared_ptr<const PolicyNetwork<T>> net, bool record_probabilities = false) {
  return [net = std::move(net), record_probabilities](const GenerationContext& ctx) {
    const auto features = encode_party(ctx.party, ctx.pack, net->arch());
    SampleOptions opt;
    opt.record_probabilities = record_probabilities;
    auto [encounter, trace] = sample_encounter(*net, features, ctx.rng, opt);
    auto proposal = make_proposal(std::move(encounter), ctx.party, ctx.tier, ctx.pack, Provenance::Ntrl);
    proposal.probabilities = std::move(trace.probabilities);
    return proposal;
  };
}

struct FinalEvaluation {
  std::vector<PolicySummary> per_checkpoint;
  PolicySummary pooled;
};

inline ordered_json to_json(const FinalEvaluation& e) {
  ordered_json per = ordered_json::array();
  for (const auto& s : e.per_checkpoint) per.push_back(to_json(s));
  return ordered_json{{"per_checkpoint", per}, {"pooled", to_json(e.pooled)}};
}

/// Evaluates each checkpoint on the same parties; `hp_variation` off puts
/// every party at full HP. Pooled values are means of per-checkpoint means.
inline FinalEvaluation evaluate_final(const std::vector<Checkpoint>& checkpoints, const ContentPack& pack,
                                      int n_parties, int n_sims, bool hp_variation, std::uint64_t base_seed,
                                      Tier tier = Tier::Deadly, const UtilityTable& utility = {}) {
  if (checkpoints.empty()) throw Error(ErrorCode::InvalidConfig, "at least one checkpoint is required", "checkpoints");
  FinalEvaluation out;
  EvaluationOptions opt;
  opt.tier = tier;
  if (!hp_variation) opt.hp_variation.reset();
  opt.batch.combat.utility = utility;
  std::vector<BatchMetrics> means;
  for (const auto& ckpt : checkpoints) {
    auto net = std::make_shared<const PolicyNetworkF>(ckpt.network<float>());
    const auto report = evaluate_policy(ntrl_policy(net), pack, n_parties, n_sims, base_seed, opt);
    out.per_checkpoint.push_back(report.summary);
  }
  auto& p = out.pooled;
  const double n = static_cast<double>(out.per_checkpoint.size());
  for (const auto& s : out.per_checkpoint) {
    p.win_probability += s.win_probability / n;
    p.fight_longevity += s.fight_longevity / n;
    p.tpk_count += s.tpk_count / n;
    p.tpk_rate += s.tpk_rate / n;
    p.team_xp_difference += s.team_xp_difference / n;
    p.mean_abs_xp_difference += s.mean_abs_xp_difference / n;
    p.mean_budget += s.mean_budget / n;
    p.remaining_party_hp_pct += s.remaining_party_hp_pct / n;
    p.total_damage_to_party += s.total_damage_to_party / n;
    p.total_player_deaths += s.total_player_deaths / n;
    p.n_batches += s.n_batches;
    p.n_sims += s.n_sims;
  }
  return out;
}

}  // namespace ntrl
