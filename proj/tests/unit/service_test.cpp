#include <set>
#include <thread>

#include "ntrl/service/http.hpp"
#include "support.hpp"

namespace ntrl::service {
namespace {

using ntrl::testing::pack;

std::shared_ptr<const ContentPack> shared_pack() {
  static const auto p = std::make_shared<const ContentPack>(pack());
  return p;
}

ServiceConfig config(std::filesystem::path dir = {}) {
  ServiceConfig c;
  c.data_dir = std::move(dir);
  c.server_seed = 1234;
  return c;
}

Response get(Service& s, const std::string& path, std::map<std::string, std::string> query = {}) {
  return s.handle({"GET", path, std::move(query), {}});
}

Response post(Service& s, const std::string& path, const json& body) {
  return s.handle({"POST", path, {}, body.dump()});
}

std::string new_session(Service& s, bool hp_variation = false) {
  const auto r = get(s, "/api/party/random", {{"hp_variation", hp_variation ? "on" : "off"}});
  EXPECT_EQ(r.status, 200) << r.body.dump();
  return r.body.at("session").get<std::string>();
}

std::shared_ptr<const PolicyNetworkF> small_model() {
  auto arch = ArchitectureConfig::from_pack(pack());
  arch.hidden = 16;
  return std::make_shared<const PolicyNetworkF>(arch, 5);
}

// ---------------------------------------------------------------------------
// Parties and sessions

TEST(Service, RandomPartyAtFullHp) {
  Service s(shared_pack(), config());
  std::set<std::string> ids;
  for (int i = 0; i < 20; ++i) {
    const auto r = get(s, "/api/party/random");
    ASSERT_EQ(r.status, 200);
    ids.insert(r.body.at("session").get<std::string>());
    const auto& members = r.body.at("party").at("members");
    EXPECT_GE(members.size(), kMinPartySize);
    EXPECT_LE(members.size(), kMaxPartySize);
    for (const auto& m : members) EXPECT_EQ(m.at("hp_current"), m.at("hp_max"));
    EXPECT_EQ(r.body.at("budget").at("total").get<long long>(), 1100 * static_cast<long long>(members.size()));
    EXPECT_FALSE(r.body.at("hp_variation").get<bool>());
  }
  EXPECT_EQ(ids.size(), 20u);
}

TEST(Service, RandomPartyWithHpVariation) {
  Service s(shared_pack(), config());
  bool any_reduced = false;
  for (int i = 0; i < 20; ++i) {
    const auto r = get(s, "/api/party/random", {{"hp_variation", "on"}});
    ASSERT_EQ(r.status, 200);
    EXPECT_TRUE(r.body.at("hp_variation").get<bool>());
    for (const auto& m : r.body.at("party").at("members")) {
      EXPECT_GE(m.at("hp_current").get<int>(), 1);
      EXPECT_LE(m.at("hp_current").get<int>(), m.at("hp_max").get<int>());
      any_reduced |= m.at("hp_current").get<int>() < m.at("hp_max").get<int>();
    }
  }
  EXPECT_TRUE(any_reduced);
  EXPECT_EQ(get(s, "/api/party/random", {{"hp_variation", "maybe"}}).status, 400);
}

TEST(Service, SessionsSurviveARestart) {
  ntrl::testing::TempDir dir("service_restart");
  std::string id;
  {
    Service s(shared_pack(), config(dir.path()));
    id = new_session(s, true);
  }
  Service again(shared_pack(), config(dir.path()));
  ASSERT_TRUE(again.session(id).has_value());
  EXPECT_TRUE(again.session(id)->hp_variation);
  EXPECT_EQ(post(again, "/api/simulate", {{"session", id}, {"encounter", {"orc"}}, {"sims", 2}}).status, 200);
}

// ---------------------------------------------------------------------------
// Simulation

TEST(Service, SimulateValidatesTheEncounter) {
  Service s(shared_pack(), config());
  const auto id = new_session(s);
  const json nine = json::array({"orc", "orc", "orc", "orc", "orc", "orc", "orc", "orc", "orc"});
  auto r = post(s, "/api/simulate", {{"session", id}, {"encounter", nine}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("code"), "INVALID_ENCOUNTER");
  r = post(s, "/api/simulate", {{"session", id}, {"encounter", json::array()}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("code"), "EMPTY_ENCOUNTER");
  r = post(s, "/api/simulate", {{"session", id}, {"encounter", {"dragon"}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("field"), "encounter[0]");
}

TEST(Service, SimulateIsSeedDeterministic) {
  Service s(shared_pack(), config());
  const auto id = new_session(s);
  const json body{{"session", id}, {"encounter", {"ogre", "orc", "orc"}}, {"sims", 20}, {"seed", 99}};
  const auto a = post(s, "/api/simulate", body);
  const auto b = post(s, "/api/simulate", body);
  ASSERT_EQ(a.status, 200) << a.body.dump();
  EXPECT_EQ(a.body.dump(), b.body.dump());
  EXPECT_EQ(a.body.at("seed").get<std::uint64_t>(), 99u);
  EXPECT_EQ(a.body.at("metrics").at("n_sims"), 20);
  const auto direct = run_batch(s.session(id)->party, encounter_from_json(json{"ogre", "orc", "orc"}, pack()), 20, 99, pack());
  EXPECT_EQ(a.body.at("metrics").dump(), to_json(direct).dump());
  EXPECT_EQ(a.body.at("metrics").size(), 8u);
}

TEST(Service, SimulateSimsBounds) {
  Service s(shared_pack(), config());
  const auto id = new_session(s);
  const auto r = post(s, "/api/simulate", {{"session", id}, {"encounter", {"kobold"}}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("metrics").at("n_sims"), 100);
  auto bad = post(s, "/api/simulate", {{"session", id}, {"encounter", {"kobold"}}, {"sims", 1001}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(bad.body.at("field"), "sims");
  bad = post(s, "/api/simulate", {{"session", id}, {"encounter", {"kobold"}}, {"sims", 0}});
  EXPECT_EQ(bad.status, 400);
  EXPECT_EQ(post(s, "/api/simulate", {{"session", id}, {"encounter", {"kobold"}}, {"sims", 1000}}).status, 200);
}

TEST(Service, UnknownSessionAndBadRequests) {
  Service s(shared_pack(), config());
  auto r = post(s, "/api/simulate", {{"session", "nope"}, {"encounter", {"orc"}}});
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body.at("code"), "UNKNOWN_SESSION");
  r = s.handle({"POST", "/api/simulate", {}, "{not json"});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("code"), "BAD_REQUEST");
  r = post(s, "/api/simulate", {{"encounter", {"orc"}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("field"), "session");
  EXPECT_EQ(get(s, "/api/nothing").status, 404);
  EXPECT_EQ(get(s, "/api/simulate").status, 405);
}

// ---------------------------------------------------------------------------
// Submissions

TEST(Service, SubmissionRules) {
  Service s(shared_pack(), config());
  const auto id = new_session(s);
  auto r = post(s, "/api/submissions", {{"session", id}, {"encounters", {{"orc"}, {"ogre"}}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("code"), "WRONG_COUNT");
  r = post(s, "/api/submissions", {{"session", id}, {"encounters", {{"orc", "ogre"}, {"ogre", "orc"}, {"troll"}}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("code"), "DUPLICATE_ENCOUNTER");
  r = post(s, "/api/submissions", {{"session", id}, {"encounters", {{"orc"}, {"ogre"}, json::array()}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body.at("field"), "encounters[2]");
}

TEST(Service, SubmissionIsStoredAndReplays) {
  ntrl::testing::TempDir dir("service_submit");
  auto cfg = config(dir.path());
  cfg.default_sims = 10;
  Service s(shared_pack(), cfg);
  s.set_model(small_model());
  const auto id = new_session(s);
  const json encounters = {{"orc", "orc"}, {"ogre"}, {"troll", "wolf"}};
  const auto r = post(s, "/api/submissions", {{"session", id}, {"encounters", encounters}, {"nickname", "sam"}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body.at("nickname"), "sam");
  EXPECT_EQ(r.body.at("n_sims"), 10);
  ASSERT_EQ(r.body.at("results").size(), 3u);
  EXPECT_TRUE(r.body.at("comparison").contains("dm"));
  EXPECT_TRUE(r.body.at("comparison").contains("ntrl"));

  const auto stored = ntrl::testing::read_file(dir.path() / "submissions.jsonl");
  const auto record = json::parse(stored.substr(0, stored.find('\n')));
  EXPECT_EQ(record.dump(), json::parse(r.body.dump()).dump());
  const auto replayed = replay_submission(record, pack());
  ASSERT_EQ(replayed.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_EQ(json::parse(to_json(replayed[i]).dump()), record.at("results")[i].at("metrics"));

  // Both files are append-only.
  const auto sessions_before = ntrl::testing::read_file(dir.path() / "sessions.jsonl");
  new_session(s);
  post(s, "/api/submissions", {{"session", id}, {"encounters", {{"kobold"}, {"goblin"}, {"wolf"}}}});
  EXPECT_TRUE(ntrl::testing::read_file(dir.path() / "sessions.jsonl").starts_with(sessions_before));
  EXPECT_TRUE(ntrl::testing::read_file(dir.path() / "submissions.jsonl").starts_with(stored));
}

// ---------------------------------------------------------------------------
// Suggestions, content and budget

TEST(Service, SuggestNeedsAModelForNtrl) {
  Service s(shared_pack(), config());
  const auto id = new_session(s);
  const auto r = post(s, "/api/suggest", {{"session", id}, {"policy", "ntrl"}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body.at("code"), "NO_MODEL_LOADED");
  EXPECT_EQ(post(s, "/api/suggest", {{"session", id}, {"policy", "magic"}}).status, 400);
}

TEST(Service, SuggestWithModel) {
  Service s(shared_pack(), config());
  s.set_model(small_model());
  const auto id = new_session(s);
  for (int i = 0; i < 10; ++i) {
    const auto r = post(s, "/api/suggest", {{"session", id}, {"policy", "ntrl"}});
    ASSERT_EQ(r.status, 200) << r.body.dump();
    EXPECT_EQ(r.body.at("provenance"), "NTRL");
    const auto n = r.body.at("encounter").size();
    EXPECT_GE(n, 1u);
    EXPECT_LE(n, kMaxEnemies);
    for (const auto& draw : r.body.at("probabilities")) {
      double sum = 0.0;
      for (const auto& p : draw) sum += p.get<double>();
      EXPECT_NEAR(sum, 1.0, 1e-6);
    }
  }
  const json fixed{{"session", id}, {"policy", "ntrl"}, {"seed", 5}};
  EXPECT_EQ(post(s, "/api/suggest", fixed).body.dump(), post(s, "/api/suggest", fixed).body.dump());
}

TEST(Service, SuggestDmIsClosestToBudget) {
  Service s(shared_pack(), config());
  const auto id = new_session(s);
  const auto r = post(s, "/api/suggest", {{"session", id}, {"policy", "dm"}, {"tier", "hard"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body.at("budget").at("tier"), "HARD");
  const auto party = s.session(id)->party;
  const auto best = dm_encounter_for_budget(party_xp_budget(party, Tier::Hard, pack()).total, pack());
  EXPECT_EQ(r.body.at("encounter").dump(), encounter_to_json(best, pack()).dump());
  EXPECT_EQ(post(s, "/api/suggest", {{"session", id}, {"policy", "rnd"}}).body.at("provenance"), "RND");
}

TEST(Service, MonsterListAndBudget) {
  Service s(shared_pack(), config());
  const auto m = get(s, "/api/content/monsters");
  ASSERT_EQ(m.status, 200);
  EXPECT_EQ(m.body.at("monsters").size(), 26u);
  EXPECT_EQ(m.body.at("max_enemies"), 8);
  EXPECT_EQ(m.body.at("multiplier_permille").size(), 8u);

  const auto id = new_session(s);
  const auto size = static_cast<long long>(s.session(id)->party.members.size());
  auto b = get(s, "/api/budget", {{"session", id}, {"tier", "deadly"}});
  ASSERT_EQ(b.status, 200);
  EXPECT_EQ(b.body.at("total").get<long long>(), 1100 * size);
  b = get(s, "/api/budget", {{"session", id}, {"tier", "legendary"}});
  EXPECT_EQ(b.status, 400);
  EXPECT_EQ(get(s, "/api/budget", {}).status, 400);
}

TEST(Service, MissingPackAnswers503) {
  Service s(nullptr, config());
  const auto r = get(s, "/api/content/monsters");
  EXPECT_EQ(r.status, 503);
  EXPECT_EQ(r.body.at("code"), "PACK_UNAVAILABLE");
}

TEST(Service, LoadModelChecksVocabulary) {
  ntrl::testing::TempDir dir("service_model");
  Service s(shared_pack(), config());
  save_checkpoint(make_checkpoint(*small_model(), 0, 0), dir.path() / "m.ntrl");
  EXPECT_NO_THROW(s.load_model(dir.path() / "m.ntrl"));
  EXPECT_NE(s.model(), nullptr);
  auto arch = small_model()->arch();
  arch.monsters[0] = "dragon";
  save_checkpoint(make_checkpoint(PolicyNetworkF(arch, 1), 0, 0), dir.path() / "bad.ntrl");
  ntrl::testing::expect_error(ErrorCode::VersionMismatch, [&] { s.load_model(dir.path() / "bad.ntrl"); });
}

// ---------------------------------------------------------------------------
// HTTP transport

TEST(Http, RoutesThroughTheServer) {
  Service s(shared_pack(), config());
  httplib::Server server;
  bind(server, s);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  auto party = client.Get("/api/party/random");
  ASSERT_TRUE(party);
  EXPECT_EQ(party->status, 200);
  const auto id = json::parse(party->body).at("session").get<std::string>();
  const json body{{"session", id}, {"encounter", {"orc"}}, {"sims", 3}, {"seed", 1}};
  auto sim = client.Post("/api/simulate", body.dump(), "application/json");
  ASSERT_TRUE(sim);
  EXPECT_EQ(sim->status, 200);
  EXPECT_EQ(json::parse(sim->body).at("metrics").at("n_sims"), 3);
  auto missing = client.Get("/api/budget?session=nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  server.stop();
  worker.join();
}

}  // namespace
}  // namespace ntrl::service
