#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "ntrl/training/train.hpp"

namespace ntrl::service {

struct ServiceConfig {
  /// Directory for sessions.jsonl and submissions.jsonl; empty keeps everything in memory.
  std::filesystem::path data_dir;
  /// Root of server-assigned seeds and session ids; nullopt draws one from the OS.
  std::optional<std::uint64_t> server_seed;
  int default_sims = 100;
  int max_sims = 1000;
  HpVariationConfig hp_variation{};
  BatchOptions batch{};
};

struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct Response {
  int status = 200;
  ordered_json body;
};

struct Session {
  std::string id;
  Party party;
  bool hp_variation = false;
  std::string created;
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::NoModelLoaded: return 409;
    case ErrorCode::PackUnavailable: return 503;
    case ErrorCode::MissingFile:
    case ErrorCode::Io:
    case ErrorCode::CorruptCheckpoint:
    case ErrorCode::VersionMismatch:
    case ErrorCode::ShapeMismatch:
    case ErrorCode::TraceMismatch:
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::PoolSizeMismatch:
    case ErrorCode::DanglingReference: return 500;
    default: return 400;
  }
}

inline Response error_response(int status, std::string_view code, const std::string& message,
                               const std::string& field = {}) {
  ordered_json body{{"code", code}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  return {status, body};
}

inline Response error_response(const Error& e) {
  return error_response(http_status(e.code()), to_string(e.code()), e.message(), e.field());
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline const json& require(const json& body, const char* key) {
  if (!body.contains(key)) throw Error(ErrorCode::BadRequest, std::string("missing field '") + key + "'", key);
  return body.at(key);
}

inline std::string require_string(const json& body, const char* key) {
  const auto& v = require(body, key);
  if (!v.is_string()) throw Error(ErrorCode::BadRequest, std::string("'") + key + "' must be a string", key);
  return v.get<std::string>();
}

inline std::optional<std::uint64_t> optional_seed(const json& body) {
  if (!body.contains("seed") || body.at("seed").is_null()) return std::nullopt;
  const auto& v = body.at("seed");
  if (!v.is_number_unsigned()) throw Error(ErrorCode::BadRequest, "seed must be a non-negative integer", "seed");
  return v.get<std::uint64_t>();
}

/// Multiset identity of an encounter: its sorted pool indices.
inline std::vector<std::size_t> multiset_key(const Encounter& e) {
  auto key = e.enemies;
  std::sort(key.begin(), key.end());
  return key;
}

}  // namespace detail

/// Re-runs a stored submission from its recorded party, encounters and seed.
inline std::vector<BatchMetrics> replay_submission(const json& record, const ContentPack& pack,
                                                   const BatchOptions& batch = {}) {
  const auto party = party_from_json(record.at("party"), pack);
  const auto seed = record.at("seed").get<std::uint64_t>();
  const int sims = record.at("n_sims").get<int>();
  std::vector<BatchMetrics> out;
  for (const auto& r : record.at("results")) {
    const auto e = encounter_from_json(r.at("encounter"), pack);
    out.push_back(run_batch(party, e, sims, seed, pack, batch));
  }
  return out;
}

/// The HTTP API without the transport: each request maps to a status and a JSON
/// body. Safe to call from several threads.
class Service {
 public:
  explicit Service(std::shared_ptr<const ContentPack> pack, ServiceConfig cfg = {})
      : pack_(std::move(pack)), cfg_(std::move(cfg)) {
    server_seed_ = cfg_.server_seed ? *cfg_.server_seed : (std::uint64_t{std::random_device{}()} << 32) ^ std::random_device{}();
    if (!cfg_.data_dir.empty()) {
      std::filesystem::create_directories(cfg_.data_dir);
      if (pack_) restore_sessions();
    }
  }

  const ServiceConfig& config() const noexcept { return cfg_; }
  std::shared_ptr<const ContentPack> pack() const noexcept { return pack_; }

  /// Replaces the served model; suggestions already running keep the old one.
  void set_model(std::shared_ptr<const PolicyNetworkF> net) {
    std::lock_guard lock(model_mutex_);
    model_ = std::move(net);
  }

  void load_model(const std::filesystem::path& path) {
    if (!pack_) throw Error(ErrorCode::PackUnavailable, "content pack not loaded");
    const auto ckpt = load_checkpoint(path);
    require_pack_vocabulary(ckpt.arch, *pack_);
    set_model(std::make_shared<const PolicyNetworkF>(ckpt.network<float>()));
  }

  std::shared_ptr<const PolicyNetworkF> model() const {
    std::lock_guard lock(model_mutex_);
    return model_;
  }

  std::optional<Session> session(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
  }

  Response handle(const Request& req) {
    try {
      if (!req.path.starts_with("/api/"))
        return error_response(404, "NOT_FOUND", "no such endpoint: " + req.path);
      if (!pack_) throw Error(ErrorCode::PackUnavailable, "content pack not loaded");
      const auto route = [&](const char* method, const char* path) { return req.path == path && req.method == method; };
      if (route("GET", "/api/party/random")) return random_party(req);
      if (route("POST", "/api/simulate")) return simulate(parse_body(req));
      if (route("POST", "/api/submissions")) return submit(parse_body(req));
      if (route("POST", "/api/suggest")) return suggest(parse_body(req));
      if (route("GET", "/api/content/monsters")) return monsters();
      if (route("GET", "/api/budget")) return budget(req);
      for (const char* known : {"/api/party/random", "/api/simulate", "/api/submissions", "/api/suggest",
                                "/api/content/monsters", "/api/budget"})
        if (req.path == known) return error_response(405, "METHOD_NOT_ALLOWED", req.method + " not allowed on " + req.path);
      return error_response(404, "NOT_FOUND", "no such endpoint: " + req.path);
    } catch (const Error& e) {
      return error_response(e);
    } catch (const json::exception& e) {
      return error_response(400, to_string(ErrorCode::BadRequest), e.what());
    }
  }

 private:
  static json parse_body(const Request& req) {
    json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
    if (body.is_discarded() || !body.is_object())
      throw Error(ErrorCode::BadRequest, "request body must be a JSON object", "body");
    return body;
  }

  std::uint64_t next_seed() { return mix_seed(server_seed_, counter_.fetch_add(1)); }

  Session lookup(const std::string& id) const {
    auto s = session(id);
    if (!s) throw Error(ErrorCode::UnknownSession, "unknown session '" + id + "'", "session");
    return *s;
  }

  ordered_json session_json(const Session& s) const {
    ordered_json j;
    j["session"] = s.id;
    j["created"] = s.created;
    j["hp_variation"] = s.hp_variation;
    j["party"] = party_to_json(s.party, *pack_);
    j["budget"] = to_json(party_xp_budget(s.party, cfg_.batch.tier, *pack_));
    return j;
  }

  void append_line(const char* file, const ordered_json& line) {
    if (cfg_.data_dir.empty()) return;
    std::lock_guard lock(writer_mutex_);
    std::ofstream out(cfg_.data_dir / file, std::ios::app);
    if (!out) throw Error(ErrorCode::Io, std::string("cannot append to ") + file);
    out << line.dump() << '\n';
  }

  void restore_sessions() {
    std::ifstream in(cfg_.data_dir / "sessions.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line, nullptr, false);
      if (j.is_discarded()) continue;
      Session s;
      s.id = j.at("session").get<std::string>();
      s.created = j.value("created", "");
      s.hp_variation = j.value("hp_variation", false);
      s.party = party_from_json(j.at("party"), *pack_);
      sessions_.emplace(s.id, std::move(s));
    }
  }

  Response random_party(const Request& req) {
    bool hp_variation = false;
    if (auto it = req.query.find("hp_variation"); it != req.query.end()) {
      if (it->second == "on") hp_variation = true;
      else if (it->second != "off") throw Error(ErrorCode::BadRequest, "hp_variation must be 'on' or 'off'", "hp_variation");
    }
    const RngStream root(next_seed());
    auto party_rng = root.split("party");
    Session s;
    s.party = generate_party(*pack_, party_rng);
    if (hp_variation) {
      auto hp_rng = root.split("hp");
      s.party = apply_hp_variation(s.party, *pack_, cfg_.hp_variation, hp_rng);
    }
    s.hp_variation = hp_variation;
    s.created = utc_timestamp();
    {
      std::unique_lock lock(sessions_mutex_);
      do s.id = hex64(root.split("session").next_u64() ^ counter_.fetch_add(1));
      while (sessions_.contains(s.id));
      sessions_.emplace(s.id, s);
    }
    const auto body = session_json(s);
    append_line("sessions.jsonl", body);
    return {200, body};
  }

  int sims_from(const json& body) const {
    if (!body.contains("sims") || body.at("sims").is_null()) return cfg_.default_sims;
    const auto& v = body.at("sims");
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > cfg_.max_sims)
      throw Error(ErrorCode::BadRequest, "sims must be an integer in [1, " + std::to_string(cfg_.max_sims) + "]", "sims");
    return v.get<int>();
  }

  Response simulate(const json& body) {
    const auto s = lookup(detail::require_string(body, "session"));
    const auto encounter = encounter_from_json(detail::require(body, "encounter"), *pack_);
    const int sims = sims_from(body);
    const auto seed = detail::optional_seed(body).value_or(next_seed());
    const auto metrics = run_batch(s.party, encounter, sims, seed, *pack_, cfg_.batch);
    ordered_json out;
    out["session"] = s.id;
    out["encounter"] = encounter_to_json(encounter, *pack_);
    out["adjusted_xp"] = adjusted_encounter_xp(encounter, *pack_);
    out["seed"] = seed;
    out["metrics"] = to_json(metrics);
    return {200, out};
  }

  Response submit(const json& body) {
    const auto s = lookup(detail::require_string(body, "session"));
    const auto& list = detail::require(body, "encounters");
    if (!list.is_array() || list.size() != 3)
      throw Error(ErrorCode::WrongCount, "exactly 3 encounters are required", "encounters");
    std::vector<Encounter> encounters;
    for (std::size_t i = 0; i < list.size(); ++i) {
      try {
        encounters.push_back(encounter_from_json(list[i], *pack_));
      } catch (const Error& e) {
        throw Error(e.code(), e.message(), "encounters[" + std::to_string(i) + "]");
      }
    }
    for (std::size_t i = 0; i < encounters.size(); ++i)
      for (std::size_t k = i + 1; k < encounters.size(); ++k)
        if (detail::multiset_key(encounters[i]) == detail::multiset_key(encounters[k]))
          throw Error(ErrorCode::DuplicateEncounter,
                      "encounters " + std::to_string(i) + " and " + std::to_string(k) + " are the same",
                      "encounters[" + std::to_string(k) + "]");
    std::optional<std::string> nickname;
    if (body.contains("nickname") && body.at("nickname").is_string()) nickname = body.at("nickname").get<std::string>();

    const auto seed = next_seed();
    const int sims = cfg_.default_sims;
    ordered_json results = ordered_json::array();
    for (const auto& e : encounters) {
      const auto metrics = run_batch(s.party, e, sims, seed, *pack_, cfg_.batch);
      results.push_back(ordered_json{{"encounter", encounter_to_json(e, *pack_)},
                                     {"adjusted_xp", adjusted_encounter_xp(e, *pack_)},
                                     {"metrics", to_json(metrics)}});
    }
    ordered_json record;
    record["submission_id"] = hex64(mix_seed(seed, fnv1a64(s.id)));
    record["session"] = s.id;
    record["created"] = utc_timestamp();
    if (nickname) record["nickname"] = *nickname;
    record["seed"] = seed;
    record["n_sims"] = sims;
    record["party"] = party_to_json(s.party, *pack_);
    record["results"] = results;
    record["comparison"] = comparison(s, seed, sims);
    append_line("submissions.jsonl", record);
    return {200, record};
  }

  /// Baseline and learned-policy encounters on the same party and seed, for side-by-side display.
  ordered_json comparison(const Session& s, std::uint64_t seed, int sims) const {
    ordered_json out;
    const auto add = [&](const char* name, const EncounterProposal& p) {
      out[name] = ordered_json{{"encounter", encounter_to_json(p.encounter, *pack_)},
                               {"adjusted_xp", p.adjusted_xp},
                               {"metrics", to_json(run_batch(s.party, p.encounter, sims, seed, *pack_, cfg_.batch))}};
    };
    RngStream rng(seed);
    add("dm", generate_dm(GenerationContext{s.party, *pack_, rng, cfg_.batch.tier}));
    if (auto net = model()) add("ntrl", ntrl_policy(net)(GenerationContext{s.party, *pack_, rng, cfg_.batch.tier}));
    return out;
  }

  Response suggest(const json& body) {
    const auto s = lookup(detail::require_string(body, "session"));
    const auto policy = detail::require_string(body, "policy");
    Tier tier = cfg_.batch.tier;
    if (body.contains("tier")) {
      if (!body.at("tier").is_string()) throw Error(ErrorCode::BadRequest, "tier must be a string", "tier");
      tier = parse_tier(body.at("tier").get<std::string>());
    }
    const auto seed = detail::optional_seed(body).value_or(next_seed());
    RngStream rng(seed);
    const GenerationContext ctx{s.party, *pack_, rng, tier};
    EncounterProposal proposal;
    if (policy == "dm") {
      proposal = generate_dm(ctx);
    } else if (policy == "rnd") {
      proposal = generate_rnd(ctx);
    } else if (policy == "ntrl") {
      auto net = model();
      if (!net) throw Error(ErrorCode::NoModelLoaded, "no checkpoint is loaded", "policy");
      proposal = ntrl_policy(std::move(net), /*record_probabilities=*/true)(ctx);
    } else {
      throw Error(ErrorCode::BadRequest, "policy must be one of ntrl, dm, rnd", "policy");
    }
    auto out = to_json(proposal, *pack_);
    out["session"] = s.id;
    out["seed"] = seed;
    return {200, out};
  }

  Response monsters() const {
    ordered_json list = ordered_json::array();
    for (const auto& m : pack_->monsters)
      list.push_back(ordered_json{{"id", m.id},
                                  {"name", m.name},
                                  {"challenge_rating", m.challenge_rating},
                                  {"xp_value", m.xp_value},
                                  {"hp_max", m.hp_max},
                                  {"ac", m.ac}});
    ordered_json multipliers = ordered_json::array();
    for (std::size_t n = 1; n <= kMaxEnemies; ++n) multipliers.push_back(pack_->multiplier_permille(n));
    return {200, ordered_json{{"monsters", list}, {"max_enemies", kMaxEnemies}, {"multiplier_permille", multipliers}}};
  }

  Response budget(const Request& req) const {
    auto it = req.query.find("session");
    if (it == req.query.end()) throw Error(ErrorCode::BadRequest, "missing query parameter 'session'", "session");
    const auto s = lookup(it->second);
    Tier tier = cfg_.batch.tier;
    if (auto t = req.query.find("tier"); t != req.query.end()) tier = parse_tier(t->second);
    auto out = to_json(party_xp_budget(s.party, tier, *pack_));
    out["session"] = s.id;
    return {200, out};
  }

  std::shared_ptr<const ContentPack> pack_;
  ServiceConfig cfg_;
  std::uint64_t server_seed_ = 0;
  std::atomic<std::uint64_t> counter_{0};
  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, Session> sessions_;
  mutable std::mutex model_mutex_;
  std::shared_ptr<const PolicyNetworkF> model_;
  std::mutex writer_mutex_;
};

}  // namespace ntrl::service
