#include <map>
#include <set>

#include "ntrl/sim/batch.hpp"
#include "support.hpp"

namespace ntrl {
namespace {

using testing::expect_error;
using testing::monster;
using testing::pack;
using testing::pc;

Party party_of(std::initializer_list<const char*> ids) {
  std::vector<std::size_t> idx;
  for (const char* id : ids) idx.push_back(pc(id));
  return full_hp_party(idx, pack());
}

Encounter encounter_of(std::initializer_list<const char*> ids) {
  Encounter e;
  for (const char* id : ids) e.enemies.push_back(monster(id));
  return e;
}

/// A plain brute with one melee attack, for hand-built scoring fixtures.
StatBlock brute(std::string id, int to_hit, const char* damage, int hp, int ac) {
  StatBlock b;
  b.id = std::move(id);
  b.name = b.id;
  b.kind = Kind::Monster;
  b.hp_max = hp;
  b.ac = ac;
  AttackSpec a;
  a.name = "club";
  a.to_hit_bonus = to_hit;
  a.damage = parse_dice(damage);
  b.attacks.push_back(a);
  return b;
}

CombatState state_of(const std::vector<RosterEntry>& party, const std::vector<RosterEntry>& enemies,
                     bool log = false, std::uint64_t seed = 0) {
  CombatOptions opt;
  opt.record_log = log;
  RngStream rng(seed);
  return start_combat(party, enemies, pack(), opt, rng);
}

// ---------------------------------------------------------------------------
// run_combat

TEST(Combat, MirrorDuelIsFair) {
  const auto& ogre = pack().monsters[monster("ogre")];
  const std::vector<RosterEntry> a{{&ogre, ogre.hp_max}}, b{{&ogre, ogre.hp_max}};
  int first = 0, second = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto r = run_combat(a, b, pack(), mix_seed(2024, static_cast<std::uint64_t>(i)));
    first += r.winner == Winner::Party;
    second += r.winner == Winner::Enemy;
  }
  EXPECT_NEAR(first / double(n), 0.5, 0.02);
  EXPECT_NEAR(second / double(n), 0.5, 0.02);
}

TEST(Combat, FourPcsAlwaysBeatAKobold) {
  const auto m = run_batch(party_of({"fighter", "cleric", "rogue", "wizard"}), encounter_of({"kobold"}), 100, 5, pack());
  EXPECT_EQ(m.win_probability, 1.0);
  EXPECT_EQ(m.tpk_count, 0);
  EXPECT_EQ(m.total_player_deaths, 0);
}

TEST(Combat, SameSeedGivesByteIdenticalLogs) {
  CombatOptions opt;
  opt.record_log = true;
  const auto party = party_of({"paladin", "druid", "sorcerer", "barbarian", "monk"});
  const auto enc = encounter_of({"troll", "gnoll", "gnoll", "wolf"});
  const auto a = run_combat(party, enc, pack(), 42, opt);
  const auto b = run_combat(party, enc, pack(), 42, opt);
  ASSERT_FALSE(a.log.empty());
  EXPECT_EQ(log_to_jsonl(a.log), log_to_jsonl(b.log));
  EXPECT_NE(log_to_jsonl(a.log), log_to_jsonl(run_combat(party, enc, pack(), 43, opt).log));
}

TEST(Combat, LoggingDoesNotChangeTheOutcome) {
  CombatOptions logged;
  logged.record_log = true;
  const auto party = party_of({"cleric", "ranger", "warlock"});
  const auto enc = encounter_of({"ogre", "orc", "orc"});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = run_combat(party, enc, pack(), seed);
    const auto b = run_combat(party, enc, pack(), seed, logged);
    EXPECT_EQ(a.winner, b.winner);
    EXPECT_EQ(a.rounds, b.rounds);
    EXPECT_EQ(a.hp_end, b.hp_end);
  }
}

TEST(Combat, LogEventsHaveTheReplayFields) {
  CombatOptions opt;
  opt.record_log = true;
  const auto r = run_combat(party_of({"fighter", "wizard", "cleric"}), encounter_of({"bugbear", "goblin"}), pack(), 9, opt);
  const auto first = json::parse(log_to_jsonl(r.log).substr(0, log_to_jsonl(r.log).find('\n')));
  for (const char* key : {"round", "actor", "action", "targets", "rolls", "damage", "state"})
    EXPECT_TRUE(first.contains(key)) << key;
  EXPECT_EQ(r.log.front().action, "initiative");
  EXPECT_EQ(r.log.back().action, "end");
  EXPECT_EQ(r.log.back().note, kWinnerTags[static_cast<std::size_t>(r.winner)]);
}

struct RandomFight {
  Party party;
  Encounter encounter;
};

RandomFight random_fight(RngStream& rng) {
  RandomFight f;
  const int n = rng.between(3, 8);
  for (int i = 0; i < n; ++i) f.party.members.push_back({rng.below(12), 0});
  for (auto& m : f.party.members) {
    const int max = pack().pc_templates[m.template_index].hp_max;
    m.hp_current = rng.between(1, max);
  }
  const int k = rng.between(1, 8);
  for (int i = 0; i < k; ++i) f.encounter.enemies.push_back(rng.below(26));
  return f;
}

TEST(Combat, InvariantsHoldOverRandomFights) {
  RngStream rng(77);
  for (int trial = 0; trial < 600; ++trial) {
    const auto f = random_fight(rng);
    const auto r = run_combat(f.party, f.encounter, pack(), rng.next_u64());
    ASSERT_GE(r.rounds, 1);
    ASSERT_LE(r.rounds, kRoundCap);
    if (r.winner == Winner::Draw) { EXPECT_EQ(r.rounds, kRoundCap); }
    if (r.tpk) { EXPECT_EQ(r.winner, Winner::Enemy); }
    // Conservation: every point of damage is visible in the HP ledger.
    long long ledger = 0, hp = 0, hp_max = 0;
    int dead = 0;
    for (std::size_t i = 0; i < f.party.members.size(); ++i) {
      ledger += r.hp_start[i] - r.hp_end[i] + r.healing_received[i];
      hp += r.hp_end[i];
      hp_max += pack().pc_templates[f.party.members[i].template_index].hp_max;
      dead += r.final_states[i] == LifeState::Dead;
      EXPECT_NE(r.final_states[i], LifeState::Removed);
      EXPECT_EQ(r.final_states[i] == LifeState::Active, r.hp_end[i] > 0);
    }
    EXPECT_EQ(r.damage_to_party, ledger);
    EXPECT_EQ(r.party_deaths, dead);
    EXPECT_DOUBLE_EQ(r.remaining_party_hp_fraction, static_cast<double>(hp) / static_cast<double>(hp_max));
    if (r.winner == Winner::Party) {
      bool someone_up = false;
      for (auto s : r.final_states) someone_up |= s == LifeState::Active;
      EXPECT_TRUE(someone_up);
    }
  }
}

TEST(Combat, RoundCapEndsInDraw) {
  CombatOptions opt;
  opt.round_cap = 1;
  const auto r = run_combat(party_of({"fighter", "cleric", "wizard"}), encounter_of({"troll"}), pack(), 3, opt);
  EXPECT_EQ(r.winner, Winner::Draw);
  EXPECT_EQ(r.rounds, 1);
  EXPECT_FALSE(r.tpk);
}

TEST(Combat, MonotoneDifficulty) {
  const auto party = party_of({"fighter", "cleric", "rogue", "wizard", "paladin"});
  for (auto base : {encounter_of({"ogre"}), encounter_of({"orc", "orc", "gnoll"}), encounter_of({"troll", "wolf"})}) {
    auto harder = base;
    harder.enemies.push_back(monster("earth_elemental"));
    const auto a = run_batch(party, base, 1000, 17, pack());
    const auto b = run_batch(party, harder, 1000, 17, pack());
    EXPECT_LE(b.win_probability, a.win_probability + 0.03);
  }
}

// ---------------------------------------------------------------------------
// take_turn and scoring

TEST(Scoring, HalfChanceOfSevenScoresThreePointFive) {
  const auto attacker = brute("attacker", 0, "2d6", 50, 10);
  const auto target = brute("target", 0, "1d4", 100, 11);
  auto s = state_of({{&attacker, 50}}, {{&target, 100}});
  ActionOption o{OptionKind::WeaponAttack, 0, ActionCost::Action, false, {}};
  o.targets.push(1);
  EXPECT_DOUBLE_EQ(hit_probability(0, 11, 0), 0.5);
  EXPECT_DOUBLE_EQ(score_action(s, 0, o), 3.5);
}

TEST(Scoring, KillBonusAppliesWhenMeanDamageDropsTarget) {
  const auto attacker = brute("attacker", 20, "2d6", 50, 10);
  const auto target = brute("target", 0, "1d4", 3, 11);
  auto s = state_of({{&attacker, 50}}, {{&target, 3}});
  ActionOption o{OptionKind::WeaponAttack, 0, ActionCost::Action, false, {}};
  o.targets.push(1);
  EXPECT_DOUBLE_EQ(score_action(s, 0, o), 0.95 * 7 + UtilityTable{}.kill_bonus);
}

TEST(Scoring, AttackOnDownedTargetScoresNothing) {
  const auto attacker = brute("attacker", 5, "2d6", 50, 10);
  const auto& fighter = pack().pc_templates[pc("fighter")];
  auto s = state_of({{&fighter, fighter.hp_max}}, {{&attacker, 50}});
  s.combatants[0].hp_current = 0;
  s.combatants[0].life_state = LifeState::Unconscious;
  ActionOption o{OptionKind::WeaponAttack, 0, ActionCost::Action, false, {}};
  o.targets.push(0);
  EXPECT_LE(score_action(s, 1, o), 0.0);
  s.combatants[0].life_state = LifeState::Dead;
  EXPECT_LE(score_action(s, 1, o), 0.0);
  for (const auto& opt : enumerate_options(s, 1, Economy{})) EXPECT_NE(opt.targets[0], 0u);
}

TEST(TakeTurn, SingleLegalActionAttacksTheOnlyEnemy) {
  const auto attacker = brute("attacker", 5, "1d6", 50, 10);
  const auto target = brute("target", 0, "1d4", 100, 12);
  auto s = state_of({{&attacker, 50}}, {{&target, 100}}, true);
  RngStream rng(1);
  const auto events = take_turn(s, 0, rng);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].action, "attack:club");
  EXPECT_EQ(events[0].targets, std::vector<std::string>{s.combatants[1].id});
}

TEST(TakeTurn, HealerPicksUpDownedAlly) {
  const auto& cleric = pack().pc_templates[pc("cleric")];
  const auto& fighter = pack().pc_templates[pc("fighter")];
  const auto& orc = pack().monsters[monster("orc")];
  auto s = state_of({{&cleric, cleric.hp_max}, {&fighter, fighter.hp_max}}, {{&orc, orc.hp_max}}, true);
  s.combatants[1].hp_current = 0;
  s.combatants[1].life_state = LifeState::Unconscious;
  double best_heal = 0.0, best_attack = 0.0;
  for (const auto& o : enumerate_options(s, 0, Economy{})) {
    const double v = score_action(s, 0, o);
    const bool heals = o.kind == OptionKind::Spell && pack().spells[o.index].effect == SpellEffect::Heal;
    (heals ? best_heal : best_attack) = std::max(heals ? best_heal : best_attack, v);
  }
  EXPECT_GT(best_heal, best_attack * 1.1 / 0.9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto copy = s;
    RngStream rng(seed);
    take_turn(copy, 0, rng);
    EXPECT_TRUE(copy.combatants[1].active()) << seed;
  }
}

TEST(TakeTurn, NothingWorthDoingLogsDodge) {
  const auto attacker = brute("attacker", 5, "1d6", 50, 10);
  const auto target = brute("target", 0, "1d4", 100, 12);
  auto s = state_of({{&attacker, 50}}, {{&target, 100}}, true);
  s.combatants[0].attack_uses[0] = 0;
  RngStream rng(1);
  const auto events = take_turn(s, 0, rng);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].action, "dodge");
  EXPECT_TRUE(s.combatants[0].has(Condition::Dodging));
}

TEST(TakeTurn, JitterBreaksTiesEvenly) {
  const auto attacker = brute("attacker", 5, "1d6", 50, 10);
  const auto target = brute("target", 0, "1d4", 100, 12);
  auto base = state_of({{&attacker, 50}}, {{&target, 100}, {&target, 100}}, true);
  int first = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto s = base;
    RngStream rng(mix_seed(5, static_cast<std::uint64_t>(i)));
    const auto events = take_turn(s, 0, rng);
    first += events.at(0).targets.at(0) == s.combatants[1].id;
  }
  EXPECT_NEAR(first / double(n), 0.5, 0.02);
}

TEST(TakeTurn, EnemyTurnsLeaveDownedPcsAlone) {
  RngStream rng(99);
  int downed_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto f = random_fight(rng);
    RngStream fight_rng(rng.next_u64());
    auto s = start_combat(party_roster(f.party, pack()), encounter_roster(f.encounter, pack()), pack(), {}, fight_rng);
    while (!decided(s) && s.round < kRoundCap) {
      ++s.round;
      for (std::size_t pos = 0; pos < s.order.size() && !decided(s); ++pos) {
        const auto actor = s.order[pos];
        const bool enemy = s.combatants[actor].side == Side::Enemy;
        std::vector<CombatantState> before(s.combatants.begin(), s.combatants.begin() + s.original_party);
        take_turn(s, actor, fight_rng);
        if (!enemy) continue;
        for (std::size_t i = 0; i < before.size(); ++i) {
          if (!before[i].downed()) continue;
          ++downed_seen;
          EXPECT_EQ(s.combatants[i].hp_current, 0);
          EXPECT_EQ(s.combatants[i].life_state, before[i].life_state);
          EXPECT_EQ(s.combatants[i].death_failures, before[i].death_failures);
        }
      }
    }
  }
  EXPECT_GT(downed_seen, 0);
}

// ---------------------------------------------------------------------------
// Death processing

CombatState downed_pc_state() {
  const auto& fighter = pack().pc_templates[pc("fighter")];
  const auto& orc = pack().monsters[monster("orc")];
  auto s = state_of({{&fighter, fighter.hp_max}, {&fighter, fighter.hp_max}}, {{&orc, orc.hp_max}});
  s.combatants[0].hp_current = 0;
  resolve_death_processing(s, 0);
  return s;
}

TEST(DeathSaves, ThreeTensStabilise) {
  auto s = downed_pc_state();
  auto& c = s.combatants[0];
  ASSERT_EQ(c.life_state, LifeState::Unconscious);
  for (int d : {10, 10, 10}) apply_death_save(c, d);
  EXPECT_EQ(c.life_state, LifeState::Stable);
  apply_death_save(c, 1);
  EXPECT_EQ(c.life_state, LifeState::Stable);
}

TEST(DeathSaves, NaturalOneThenNineKills) {
  auto s = downed_pc_state();
  auto& c = s.combatants[0];
  apply_death_save(c, 1);
  EXPECT_EQ(c.death_failures, 2);
  EXPECT_EQ(c.life_state, LifeState::Unconscious);
  apply_death_save(c, 9);
  EXPECT_EQ(c.life_state, LifeState::Dead);
}

TEST(DeathSaves, NaturalTwentyRegainsOneHp) {
  auto s = downed_pc_state();
  auto& c = s.combatants[0];
  apply_death_save(c, 5);
  apply_death_save(c, 20);
  EXPECT_EQ(c.life_state, LifeState::Active);
  EXPECT_EQ(c.hp_current, 1);
  EXPECT_EQ(c.death_failures, 0);
}

TEST(DeathSaves, EnemyAtZeroIsRemovedImmediately) {
  auto s = downed_pc_state();
  apply_damage(s, 2, 1000, DamageType::Slashing);
  EXPECT_EQ(s.combatants[2].life_state, LifeState::Removed);
  EXPECT_EQ(s.combatants[2].hp_current, 0);
}

TEST(DeathSaves, SummonsDisappearAtZero) {
  const auto& druid = pack().pc_templates[pc("druid")];
  const auto& orc = pack().monsters[monster("orc")];
  auto s = state_of({{&druid, druid.hp_max}}, {{&orc, orc.hp_max}});
  const auto spell = pack().spell_index("conjure_animals").value();
  detail::spawn_summons(s, 0, pack().spells[spell]);
  ASSERT_GT(s.combatants.size(), 2u);
  const auto summon = s.combatants.size() - 1;
  EXPECT_EQ(s.combatants[summon].side, Side::Party);
  apply_damage(s, summon, 1000, DamageType::Slashing);
  EXPECT_EQ(s.combatants[summon].life_state, LifeState::Removed);
  EXPECT_EQ(s.damage_to_party, 0);
}

TEST(DeathSaves, HealingRevivesDownedPc) {
  auto s = downed_pc_state();
  EXPECT_EQ(apply_heal(s, 0, 7), 7);
  EXPECT_TRUE(s.combatants[0].active());
  s.combatants[1].life_state = LifeState::Dead;
  EXPECT_EQ(apply_heal(s, 1, 7), 0);
}

// ---------------------------------------------------------------------------
// run_batch

TEST(Batch, SingleSimEqualsItsCombat) {
  const auto party = party_of({"bard", "monk", "ranger"});
  const auto enc = encounter_of({"ghoul", "ghoul"});
  const auto m = run_batch(party, enc, 1, 12, pack());
  const auto r = run_combat(party, enc, pack(), sim_seed(12, 0));
  EXPECT_EQ(m.n_sims, 1);
  EXPECT_EQ(m.win_probability, r.winner == Winner::Party ? 1.0 : 0.0);
  EXPECT_EQ(m.fight_longevity, r.rounds);
  EXPECT_EQ(m.tpk_count, r.tpk ? 1 : 0);
  EXPECT_EQ(m.total_damage_to_party, static_cast<double>(r.damage_to_party));
  EXPECT_EQ(m.total_player_deaths, r.party_deaths);
  EXPECT_DOUBLE_EQ(m.remaining_party_hp_pct, 100.0 * r.remaining_party_hp_fraction);
}

TEST(Batch, AggregatesInjectedResults) {
  std::vector<CombatResult> results(10);
  for (int i = 0; i < 10; ++i) {
    results[static_cast<std::size_t>(i)].winner = i < 6 ? Winner::Party : Winner::Enemy;
    results[static_cast<std::size_t>(i)].rounds = i + 1;
  }
  const auto m = aggregate_results(results, 0);
  EXPECT_DOUBLE_EQ(m.win_probability, 0.6);
  EXPECT_DOUBLE_EQ(m.fight_longevity, 5.5);
}

TEST(Batch, AllTpksAggregateToZeroes) {
  std::vector<CombatResult> results(100);
  for (auto& r : results) {
    r.winner = Winner::Enemy;
    r.tpk = true;
    r.rounds = 3;
    r.party_deaths = 2;
  }
  const auto m = aggregate_results(results, -50);
  EXPECT_EQ(m.tpk_count, 100);
  EXPECT_EQ(m.win_probability, 0.0);
  EXPECT_EQ(m.remaining_party_hp_pct, 0.0);
  EXPECT_EQ(m.total_player_deaths, 200);
  EXPECT_EQ(m.team_xp_difference, -50);
}

TEST(Batch, MetricsJsonHasExactlyTheMetricFields) {
  const auto j = to_json(run_batch(party_of({"fighter", "cleric", "wizard"}), encounter_of({"orc"}), 5, 1, pack()));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"win_probability", "fight_longevity", "tpk_count", "team_xp_difference",
                                            "remaining_party_hp_pct", "total_damage_to_party", "total_player_deaths",
                                            "n_sims"}));
  const auto back = batch_metrics_from_json(json::parse(j.dump()));
  EXPECT_EQ(to_json(back).dump(), j.dump());
}

TEST(Batch, TeamXpDifferenceIsBudgetMinusAdjustedXp) {
  const auto party = party_of({"fighter", "cleric", "rogue", "wizard"});
  const auto enc = encounter_of({"orc", "orc", "orc", "orc"});
  EXPECT_EQ(run_batch(party, enc, 1, 0, pack()).team_xp_difference, 4400 - 800);
}

TEST(Batch, PerSimSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < 100000; ++i) seeds.insert(sim_seed(123, i));
  EXPECT_EQ(seeds.size(), 100000u);
}

TEST(Batch, ThreadedEqualsSequential) {
  const auto party = party_of({"fighter", "cleric", "rogue", "wizard", "druid"});
  const auto enc = encounter_of({"troll", "orc", "orc"});
  BatchOptions threaded;
  threaded.threads = 4;
  EXPECT_EQ(to_json(run_batch(party, enc, 200, 8, pack())).dump(),
            to_json(run_batch(party, enc, 200, 8, pack(), threaded)).dump());
}

TEST(Batch, RejectsBadInput) {
  const auto party = party_of({"fighter", "cleric", "wizard"});
  expect_error(ErrorCode::InvalidConfig, [&] { run_batch(party, encounter_of({"orc"}), 0, 1, pack()); });
  expect_error(ErrorCode::InvalidEncounter,
               [&] { run_batch(party, Encounter{std::vector<std::size_t>(9, monster("orc"))}, 10, 1, pack()); });
}

}  // namespace
}  // namespace ntrl
