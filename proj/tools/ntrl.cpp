// Command-line front end: thin wrappers over the library operations. Results
// go to stdout as JSON; failures print {"code","message","field"} on stderr.
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "ntrl/policy/gradcheck.hpp"
#include "ntrl/service/http.hpp"

#ifndef NTRL_DEFAULT_PACK_DIR
#define NTRL_DEFAULT_PACK_DIR "data/pack"
#endif

namespace {

using namespace ntrl;

struct Common {
  std::uint64_t seed = 0;
  std::string pack;
  std::string config;
};

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

json read_json(const std::string& path, const char* field) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path, field);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::SchemaViolation, "invalid JSON in " + path, field);
  return j;
}

ContentPack pack_for(const Common& c) { return load_content_pack(c.pack); }

ExperimentConfig experiment_for(const Common& c) {
  return c.config.empty() ? ExperimentConfig{} : experiment_from_json(read_json(c.config, "config"));
}

void print(const ordered_json& j) { std::cout << j.dump(2) << '\n'; }

void print_error(std::string_view code, const std::string& message, const std::string& field = {}) {
  ordered_json j{{"code", code}, {"message", message}};
  if (!field.empty()) j["field"] = field;
  std::cerr << j.dump() << '\n';
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Base seed")->capture_default_str();
  cmd->add_option("--pack", c.pack, "Content pack directory (default: $NTRL_PACK or the bundled pack)");
  cmd->add_option("--config", c.config, "Experiment configuration JSON");
}

std::optional<HpVariationConfig> hp_variation_flag(const std::string& flag, const ExperimentConfig& exp) {
  if (flag == "on") return exp.hp_variation;
  if (flag == "off") return std::nullopt;
  throw Error(ErrorCode::InvalidConfig, "expected 'on' or 'off'", "hp-variation");
}

std::shared_ptr<const PolicyNetworkF> load_network(const std::string& path, const ContentPack& pack) {
  const auto ckpt = load_checkpoint(path);
  require_pack_vocabulary(ckpt.arch, pack);
  return std::make_shared<const PolicyNetworkF>(ckpt.network<float>());
}

EncounterPolicy policy_named(const std::string& name, const std::string& ckpt, const ContentPack& pack) {
  if (name == "dm") return generate_dm;
  if (name == "rnd") return generate_rnd;
  if (name == "ntrl") {
    if (ckpt.empty()) throw Error(ErrorCode::NoModelLoaded, "policy ntrl needs --ckpt", "ckpt");
    return ntrl_policy(load_network(ckpt, pack), /*record_probabilities=*/true);
  }
  throw Error(ErrorCode::InvalidConfig, "policy must be one of ntrl, dm, rnd", "policy");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NTRL encounter generation workbench"};
  app.require_subcommand(1);
  Common common;
  common.pack = env_or("NTRL_PACK", NTRL_DEFAULT_PACK_DIR);
  int exit_code = 0;

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the encounter policy with REINFORCE");
  add_common(train_cmd, common);
  std::optional<int> steps, sims, seeds;
  std::string out_dir;
  bool quiet = false;
  train_cmd->add_option("--steps", steps, "Training steps per seed");
  train_cmd->add_option("--sims", sims, "Simulations per step");
  train_cmd->add_option("--seeds", seeds, "Number of seeds (run k uses seed + k)");
  train_cmd->add_option("--out", out_dir, "Output directory for logs and checkpoints");
  train_cmd->add_flag("--quiet", quiet, "Do not print per-step progress");
  train_cmd->callback([&] {
    const auto pack = pack_for(common);
    auto exp = experiment_for(common);
    if (steps) exp.train.steps = *steps;
    if (sims) exp.train.sims_per_step = *sims;
    if (seeds) exp.train.seeds = *seeds;
    if (train_cmd->count("--seed")) exp.train.base_seed = common.seed;
    if (!out_dir.empty()) exp.train.out_dir = out_dir;
    exp.train.pack_path = common.pack;
    exp = experiment_from_json(json::parse(to_json(exp).dump()));
    if (!exp.train.out_dir.empty()) {
      std::filesystem::create_directories(exp.train.out_dir);
      std::ofstream(std::filesystem::path(exp.train.out_dir) / "experiment.json") << to_json(exp).dump(2) << '\n';
    }
    const int report_every = std::max(1, exp.train.steps / 20);
    const auto result = train(exp, pack, [&](const TrainStepRecord& r) {
      if (!quiet && (r.step + 1) % report_every == 0)
        std::cerr << "seed " << r.seed << " step " << r.step + 1 << " reward " << r.reward << '\n';
    });
    ordered_json runs = ordered_json::array();
    for (const auto& run : result.runs) {
      ordered_json ckpts = ordered_json::array();
      for (const auto& p : run.checkpoints) ckpts.push_back(p.string());
      double last = 0.0;
      int n = 0;
      for (auto it = run.records.rbegin(); it != run.records.rend() && n < 500; ++it)
        if (!it->error) last += it->reward, ++n;
      runs.push_back(ordered_json{{"seed", run.seed},
                                  {"steps", run.records.size()},
                                  {"final_window_mean_reward", n ? last / n : 0.0},
                                  {"checkpoints", ckpts}});
    }
    print(ordered_json{{"experiment_digest", experiment_digest(exp)}, {"runs", runs}});
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate final checkpoints on shared parties");
  add_common(eval_cmd, common);
  std::vector<std::string> ckpts;
  int eval_parties = 100, eval_sims = 100;
  std::string eval_hp = "off";
  eval_cmd->add_option("--ckpt", ckpts, "Checkpoint file(s)")->required();
  eval_cmd->add_option("--parties", eval_parties, "Number of parties")->capture_default_str();
  eval_cmd->add_option("--sims", eval_sims, "Simulations per party")->capture_default_str();
  eval_cmd->add_option("--hp-variation", eval_hp, "on|off")->capture_default_str();
  eval_cmd->callback([&] {
    const auto pack = pack_for(common);
    const auto exp = experiment_for(common);
    std::vector<Checkpoint> loaded;
    for (const auto& p : ckpts) {
      loaded.push_back(load_checkpoint(p));
      require_pack_vocabulary(loaded.back().arch, pack);
    }
    const bool hp = hp_variation_flag(eval_hp, exp).has_value();
    print(to_json(evaluate_final(loaded, pack, eval_parties, eval_sims, hp, common.seed, exp.train.tier, exp.utility)));
  });

  // suggest
  auto* suggest_cmd = app.add_subcommand("suggest", "Propose an encounter for a party");
  add_common(suggest_cmd, common);
  std::string suggest_policy = "ntrl", suggest_ckpt = env_or("NTRL_CKPT", ""), suggest_party, suggest_tier;
  suggest_cmd->add_option("--policy", suggest_policy, "ntrl|dm|rnd")->capture_default_str();
  suggest_cmd->add_option("--ckpt", suggest_ckpt, "Checkpoint for the ntrl policy (default: $NTRL_CKPT)");
  suggest_cmd->add_option("--party", suggest_party, "Party JSON file (default: a generated party)");
  suggest_cmd->add_option("--tier", suggest_tier, "Budget tier (default: the config's tier)");
  suggest_cmd->callback([&] {
    const auto pack = pack_for(common);
    const auto exp = experiment_for(common);
    const Tier tier = suggest_tier.empty() ? exp.train.tier : parse_tier(suggest_tier);
    const RngStream root(common.seed);
    Party party;
    if (suggest_party.empty()) {
      auto rng = root.split("party");
      party = generate_party(pack, rng);
    } else {
      party = party_from_json(read_json(suggest_party, "party"), pack);
    }
    auto rng = root.split("policy");
    const auto proposal = policy_named(suggest_policy, suggest_ckpt, pack)(GenerationContext{party, pack, rng, tier});
    auto out = to_json(proposal, pack);
    out["party"] = party_to_json(party, pack);
    print(out);
  });

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a party against an encounter");
  add_common(sim_cmd, common);
  std::string sim_party, sim_encounter, sim_log;
  int sim_sims = 100;
  sim_cmd->add_option("--party", sim_party, "Party JSON file")->required();
  sim_cmd->add_option("--encounter", sim_encounter, "Encounter JSON file")->required();
  sim_cmd->add_option("--sims", sim_sims, "Number of simulations")->capture_default_str();
  sim_cmd->add_option("--log", sim_log, "Write the event log of simulation 0 as JSON lines");
  sim_cmd->callback([&] {
    const auto pack = pack_for(common);
    const auto exp = experiment_for(common);
    const auto party = party_from_json(read_json(sim_party, "party"), pack);
    const auto encounter = encounter_from_json(read_json(sim_encounter, "encounter"), pack);
    BatchOptions opt;
    opt.tier = exp.train.tier;
    opt.combat.utility = exp.utility;
    print(to_json(run_batch(party, encounter, sim_sims, common.seed, pack, opt)));
    if (!sim_log.empty()) {
      auto combat = opt.combat;
      combat.record_log = true;
      const auto r = run_combat(party, encounter, pack, sim_seed(common.seed, 0), combat);
      std::ofstream out(sim_log);
      if (!out) throw Error(ErrorCode::Io, "cannot write " + sim_log, "log");
      out << log_to_jsonl(r.log);
    }
  });

  // baseline
  auto* base_cmd = app.add_subcommand("baseline", "Evaluate a baseline policy on generated parties");
  add_common(base_cmd, common);
  std::string base_policy = "dm", base_hp = "on", base_ckpt;
  int base_parties = 100, base_sims = 25;
  base_cmd->add_option("--policy", base_policy, "dm|rnd|ntrl")->capture_default_str();
  base_cmd->add_option("--ckpt", base_ckpt, "Checkpoint for the ntrl policy");
  base_cmd->add_option("--parties", base_parties, "Number of parties")->capture_default_str();
  base_cmd->add_option("--sims", base_sims, "Simulations per party")->capture_default_str();
  base_cmd->add_option("--hp-variation", base_hp, "on|off")->capture_default_str();
  base_cmd->callback([&] {
    const auto pack = pack_for(common);
    const auto exp = experiment_for(common);
    EvaluationOptions opt;
    opt.tier = exp.train.tier;
    opt.hp_variation = hp_variation_flag(base_hp, exp);
    opt.batch.combat.utility = exp.utility;
    const auto report = evaluate_policy(policy_named(base_policy, base_ckpt, pack), pack, base_parties, base_sims,
                                        common.seed, opt);
    auto out = to_json(report.summary);
    out["policy"] = base_policy;
    out["seed"] = common.seed;
    print(out);
  });

  // gradcheck
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference policy gradients");
  add_common(grad_cmd, common);
  GradcheckOptions grad_opt;
  grad_cmd->add_option("--nets", grad_opt.nets, "Random networks")->capture_default_str();
  grad_cmd->add_option("--inputs", grad_opt.inputs, "Inputs per network")->capture_default_str();
  grad_cmd->callback([&] {
    const auto pack = pack_for(common);
    const auto report = gradcheck(pack, common.seed, grad_opt);
    print(to_json(report));
    exit_code = report.passed ? 0 : 1;
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
  add_common(serve_cmd, common);
  std::string serve_host = "127.0.0.1", serve_ckpt = env_or("NTRL_CKPT", ""), static_dir,
              data_dir = env_or("NTRL_DATA_DIR", "ntrl_data");
  int port = std::atoi(env_or("NTRL_PORT", "8080").c_str());
  serve_cmd->add_option("--host", serve_host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Port (default: $NTRL_PORT or 8080)");
  serve_cmd->add_option("--ckpt", serve_ckpt, "Checkpoint for NTRL suggestions (default: $NTRL_CKPT)");
  serve_cmd->add_option("--static-dir", static_dir, "Built web UI to serve at /");
  serve_cmd->add_option("--data-dir", data_dir, "Session and submission store (default: $NTRL_DATA_DIR)");
  serve_cmd->callback([&] {
    const auto exp = experiment_for(common);
    service::ServiceConfig cfg;
    cfg.data_dir = data_dir;
    if (serve_cmd->count("--seed")) cfg.server_seed = common.seed;
    cfg.hp_variation = exp.hp_variation;
    cfg.batch.tier = exp.train.tier;
    cfg.batch.combat.utility = exp.utility;
    std::shared_ptr<const ContentPack> pack;
    try {
      pack = std::make_shared<const ContentPack>(pack_for(common));
    } catch (const Error& e) {
      // The API still starts and answers 503 so the failure is visible to clients.
      print_error(to_string(e.code()), e.message(), e.field());
    }
    service::Service svc(pack, cfg);
    if (!serve_ckpt.empty()) svc.load_model(serve_ckpt);
    std::cerr << "listening on " << serve_host << ':' << port << '\n';
    if (!service::serve(svc, serve_host, port, static_dir))
      throw Error(ErrorCode::Io, "cannot listen on " + serve_host + ":" + std::to_string(port), "port");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("BAD_REQUEST", e.what());
    return 2;
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.message(), e.field());
    return 2;
  } catch (const std::exception& e) {
    print_error("INTERNAL", e.what());
    return 3;
  }
  return exit_code;
}
