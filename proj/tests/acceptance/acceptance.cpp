// Acceptance checks for the primary criteria. Prints one PASS/FAIL line per
// criterion and exits non-zero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ntrl/policy/gradcheck.hpp"
#include "ntrl/service/service.hpp"

namespace {

using namespace ntrl;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const ContentPack& pack() {
  static const ContentPack p = load_content_pack(NTRL_DEFAULT_PACK_DIR);
  return p;
}

Party party_of(std::initializer_list<const char*> ids) {
  std::vector<std::size_t> idx;
  for (const char* id : ids) idx.push_back(*pack().pc_index(id));
  return full_hp_party(idx, pack());
}

Encounter encounter_of(std::initializer_list<const char*> ids) {
  Encounter e;
  for (const char* id : ids) e.enemies.push_back(*pack().monster_index(id));
  return e;
}

// Digest of the seed-42 log of a fixed fight, recorded from a reference build.
// A different value means the engine or the RNG changed behaviour.
constexpr std::uint64_t kGoldenLogDigest = 0x3a07d409c578b010ULL;

Verdict p1_determinism() {
  CombatOptions opt;
  opt.record_log = true;
  const auto party = party_of({"fighter", "cleric", "rogue", "wizard"});
  const auto enc = encounter_of({"ogre", "orc", "orc"});
  const auto a = log_to_jsonl(run_combat(party, enc, pack(), 42, opt).log);
  const auto b = log_to_jsonl(run_combat(party, enc, pack(), 42, opt).log);
  bool ok = a == b && !a.empty();
  const auto digest = fnv1a64(a);
  const bool golden = digest == kGoldenLogDigest;
  int batches_equal = 0;
  RngStream rng(7);
  for (int i = 0; i < 20; ++i) {
    auto p = generate_party(pack(), rng);
    Encounter e;
    const int n = rng.between(1, 8);
    for (int k = 0; k < n; ++k) e.enemies.push_back(rng.below(pack().monsters.size()));
    const auto seed = rng.next_u64();
    BatchOptions threaded;
    threaded.threads = 4;
    const auto x = to_json(run_batch(p, e, 50, seed, pack())).dump();
    const auto y = to_json(run_batch(p, e, 50, seed, pack())).dump();
    const auto z = to_json(run_batch(p, e, 50, seed, pack(), threaded)).dump();
    batches_equal += x == y && x == z;
  }
  ok = ok && golden && batches_equal == 20;
  return {ok, fmt("log digest %s%s, %d/20 batches identical across reruns and thread counts",
                  hex64(digest).c_str(), golden ? "" : " (differs from reference)", batches_equal)};
}

Verdict p2_gradcheck() {
  const auto r = gradcheck(pack(), 1);
  return {r.passed && r.nets == 5 && r.inputs == 5,
          fmt("max relative error %.3g over %zu parameter checks (5 nets x 5 inputs)", r.max_relative_error,
              r.parameters_checked)};
}

/// The policy network restricted to two pool classes and a single draw is a
/// two-armed bandit; arm 0 pays 1, arm 1 pays 0.
double bandit_final_probability(std::uint64_t seed) {
  PolicyNetworkF net(ArchitectureConfig::from_pack(pack()), seed);
  nn::Adam<float> optimizer(net.param_count());
  RunningBaseline baseline;
  ReinforceConfig cfg;
  cfg.reward_scale = 1.0;
  SampleOptions opt;
  opt.allowed_classes = std::vector<bool>(net.arch().pool_size(), false);
  (*opt.allowed_classes)[0] = (*opt.allowed_classes)[1] = true;
  opt.max_picks = 1;
  RngStream rng(mix_seed(seed, 0xba));
  const auto party = party_of({"fighter", "cleric", "rogue", "wizard"});
  const auto features = encode_party(party, pack(), net.arch());
  for (int step = 0; step < 500; ++step) {
    ReinforceRecord rec;
    rec.features = features;
    rec.trace = sample_encounter(net, features, rng, opt).second;
    rec.reward = rec.trace.actions[0] == 0 ? 1.0 : 0.0;
    reinforce_step(net, std::span<const ReinforceRecord>(&rec, 1), optimizer, baseline, cfg, opt);
  }
  std::vector<bool> allowed(net.arch().actions(), false);
  allowed[0] = allowed[1] = true;
  return net.forward(features, std::vector<double>(net.arch().pool_size(), 0.0), allowed)[0];
}

Verdict p3_bandit() {
  int ok = 0;
  std::string probs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double p = bandit_final_probability(seed);
    ok += p >= 0.99;
    probs += fmt("%s%.4f", seed ? " " : "", p);
  }
  return {ok == 5, fmt("%d/5 seeds reach p(better arm) >= 0.99 after 500 steps [%s]", ok, probs.c_str())};
}

Verdict p4_dm_optimality() {
  // Toy pools: exhaustive search over every multiset of 1-8 picks.
  int toy_ok = 0, toy_total = 0;
  RngStream rng(4);
  for (auto ids : {std::vector<const char*>{"goblin", "orc", "ogre"}, {"kobold", "wolf", "gnoll", "troll"},
                   {"bugbear", "owlbear", "ettin", "hill_giant"}}) {
    ContentPack toy = pack();
    toy.monsters.clear();
    for (const char* id : ids) toy.monsters.push_back(pack().monsters[*pack().monster_index(id)]);
    std::set<long long> reachable;
    std::vector<std::size_t> picks;
    const std::function<void(std::size_t)> rec = [&](std::size_t from) {
      if (!picks.empty()) reachable.insert(adjusted_encounter_xp(Encounter{picks}, toy));
      if (picks.size() == kMaxEnemies) return;
      for (std::size_t i = from; i < toy.monsters.size(); ++i) {
        picks.push_back(i);
        rec(i);
        picks.pop_back();
      }
    };
    rec(0);
    for (int t = 0; t < 100; ++t) {
      const long long budget = rng.between(1, 20000);
      long long best = std::numeric_limits<long long>::max();
      for (long long v : reachable) best = std::min(best, std::llabs(v - budget));
      toy_ok += std::llabs(adjusted_encounter_xp(dm_encounter_for_budget(budget, toy), toy) - budget) == best;
      ++toy_total;
    }
  }
  EvaluationOptions opt;
  const auto report = evaluate_policy(generate_dm, pack(), 100, 1, 4, opt);
  const double ratio = report.summary.mean_abs_xp_difference / report.summary.mean_budget;
  return {toy_ok == toy_total && ratio < 0.10,
          fmt("toy pools %d/%d budgets optimal; full pool mean |diff| %.1f = %.2f%% of mean budget %.0f", toy_ok,
              toy_total, report.summary.mean_abs_xp_difference, 100.0 * ratio, report.summary.mean_budget)};
}

Verdict p5_baselines() {
  int ok = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto dm = evaluate_policy(generate_dm, pack(), 200, 25, seed).summary;
    const auto rnd = evaluate_policy(generate_rnd, pack(), 200, 25, seed).summary;
    const bool pass = rnd.tpk_rate > dm.tpk_rate && rnd.win_probability < dm.win_probability;
    ok += pass;
    detail += fmt("%sseed %d: tpk %.3f/%.3f wp %.3f/%.3f", seed > 1 ? "; " : "", static_cast<int>(seed),
                  rnd.tpk_rate, dm.tpk_rate, rnd.win_probability, dm.win_probability);
  }
  return {ok == 3, fmt("%d/3 seeds with RND tpk > DM and RND wp < DM (RND/DM) [%s]", ok, detail.c_str())};
}

/// Means over the last 500 steps of one desk-scale training seed, for the
/// learned policy and the DM heuristic on the same parties and sim seeds.
struct WindowMeans {
  double n = 0, reward = 0, dm_reward = 0, longevity = 0, dm_longevity = 0, hp = 0, dm_hp = 0, wp = 0, tpk = 0, dm_tpk = 0;
};

Verdict p6_training() {
  ExperimentConfig exp;
  exp.train.steps = 2000;
  exp.train.sims_per_step = 25;
  exp.train.seeds = 3;
  exp.train.base_seed = 0;
  exp.train.checkpoint_every = 0;
  std::vector<WindowMeans> windows(3);
  const auto result = train(exp, pack(), [&](const TrainStepRecord& r) {
    if (r.error || r.step < exp.train.steps - 500 || !r.dm_metrics) return;
    auto& w = windows[r.seed - exp.train.base_seed];
    w.n += 1;
    w.reward += r.reward;
    w.dm_reward += *r.dm_reward;
    w.longevity += r.metrics.fight_longevity;
    w.dm_longevity += r.dm_metrics->fight_longevity;
    w.hp += r.metrics.remaining_party_hp_pct;
    w.dm_hp += r.dm_metrics->remaining_party_hp_pct;
    w.wp += r.metrics.win_probability;
    w.tpk += r.metrics.tpk_count;
    w.dm_tpk += r.dm_metrics->tpk_count;
  });
  int ok = 0;
  std::string detail;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    const double n = std::max(1.0, w.n);
    const bool a = w.reward > w.dm_reward;
    const bool b = w.longevity >= 1.5 * w.dm_longevity;
    const bool c = w.hp < w.dm_hp;
    const bool d = w.wp / n >= 0.5 && w.tpk <= 2.0 * w.dm_tpk;
    ok += a && b && c && d;
    detail += fmt("%sseed %zu: R %.0f/%.0f fl %.2f/%.2f hp %.1f/%.1f wp %.2f tpk %.2f/%.2f (abcd %d%d%d%d)",
                  k ? "; " : "", k, w.reward / n, w.dm_reward / n, w.longevity / n, w.dm_longevity / n, w.hp / n,
                  w.dm_hp / n, w.wp / n, w.tpk / n, w.dm_tpk / n, a, b, c, d);
  }
  return {ok >= 2, fmt("%d/3 seeds meet all of (a)-(d), NTRL/DM over the last 500 steps [%s]", ok, detail.c_str())};
}

Verdict p7_reward() {
  RewardConfig alpha_only;
  alpha_only.beta = alpha_only.gamma = alpha_only.delta = alpha_only.lambda = alpha_only.tpk_penalty = 0.0;
  BatchMetrics zero;
  zero.remaining_party_hp_pct = 100.0;
  bool ok = compute_reward(zero, RewardConfig{}) == 0.0 && compute_reward(zero, alpha_only) == 0.0;
  for (double wp : {0.0, 0.125, 0.5, 0.9, 1.0}) {
    BatchMetrics m;
    m.win_probability = wp;
    m.fight_longevity = 6.0;
    m.remaining_party_hp_pct = 30.0;
    m.total_damage_to_party = 80.0;
    m.total_player_deaths = 3;
    m.tpk_count = 2;
    ok = ok && compute_reward(m, alpha_only) == 1000.0 * wp;
  }
  BatchMetrics m;
  m.win_probability = 0.5;
  m.fight_longevity = 4.0;
  m.remaining_party_hp_pct = 50.0;
  double previous = compute_reward(m, RewardConfig{});
  for (int tpk = 1; tpk <= 25; ++tpk) {
    m.tpk_count = tpk;
    const double r = compute_reward(m, RewardConfig{});
    ok = ok && r < previous;
    previous = r;
  }
  return {ok, "all-zero gives 0, alpha-only gives 1000*wp, reward strictly decreasing in tpk_count"};
}

Verdict p8_hp_variation() {
  const HpVariationConfig cfg;
  const std::set<double> thresholds(cfg.thresholds.begin(), cfg.thresholds.end());
  RngStream rng(8);
  int violations = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto party = generate_party(pack(), rng);
    double threshold = 0.0;
    const auto varied = apply_hp_variation(party, pack(), cfg, rng, &threshold);
    if (!thresholds.count(threshold)) ++violations;
    for (const auto& m : varied.members) {
      const int hp_max = pack().pc_templates[m.template_index].hp_max;
      const double lo = std::floor(hp_max * threshold * (1.0 - cfg.noise));
      const double hi = std::ceil(hp_max * threshold * (1.0 + cfg.noise));
      if (m.hp_current < 1 || m.hp_current > hp_max || m.hp_current < std::min(lo, 1.0 * hp_max) ||
          m.hp_current > std::max(hi, 1.0))
        ++violations;
    }
  }
  return {violations == 0, fmt("10000 applications, %d bound or threshold violations", violations)};
}

Verdict p9_latency() {
  service::ServiceConfig cfg;
  cfg.server_seed = 9;
  service::Service svc(std::make_shared<const ContentPack>(pack()), cfg);
  const auto path = std::filesystem::temp_directory_path() / "ntrl_acceptance_model.ntrl";
  save_checkpoint(make_checkpoint(PolicyNetworkF(ArchitectureConfig::from_pack(pack()), 3), 0, 3), path);
  svc.load_model(path);
  std::filesystem::remove(path);
  const auto session = svc.handle({"GET", "/api/party/random", {}, {}}).body.at("session").get<std::string>();
  const std::string body = json{{"session", session}, {"policy", "ntrl"}}.dump();
  std::vector<double> ms;
  int failures = 0;
  for (int i = 0; i < 101; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = svc.handle({"POST", "/api/suggest", {}, body});
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    failures += r.status != 200;
  }
  std::nth_element(ms.begin(), ms.begin() + 50, ms.end());
  const double median = ms[50];
  return {failures == 0 && median < 100.0, fmt("median suggest latency %.3f ms over 101 calls", median)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments name the criteria to run (e.g. "P1 P7"); default is all.
  const std::vector<std::pair<const char*, Verdict (*)()>> criteria = {
      {"P1", p1_determinism}, {"P2", p2_gradcheck}, {"P3", p3_bandit},       {"P4", p4_dm_optimality},
      {"P5", p5_baselines},   {"P6", p6_training},  {"P7", p7_reward},       {"P8", p8_hp_variation},
      {"P9", p9_latency}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    if (!only.empty() && !only.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s (%.1fs)\n", name, v.pass ? "PASS" : "FAIL", v.detail.c_str(), s);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed == 0 ? 0 : 1;
}
