#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ntrl/content/stat_block.hpp"
#include "ntrl/error.hpp"

namespace ntrl {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr std::size_t kMonsterPoolSize = 26;
inline constexpr int kContentSchemaVersion = 1;
inline constexpr int kPartyLevel = 5;

enum class Tier : std::uint8_t { Easy, Medium, Hard, Deadly };
inline constexpr std::array<std::string_view, 4> kTierTags = {"easy", "medium", "hard", "deadly"};

struct XpThresholds {
  int level = 1;
  std::array<int, 4> per_tier{};
};

/// Enemy-count step of the encounter multiplier table. `permille` is the
/// multiplier x1000, used for exact integer arithmetic.
struct MultiplierStep {
  int min_count = 1;
  double multiplier = 1.0;
  int permille = 1000;
};

struct ContentPack {
  int schema_version = kContentSchemaVersion;
  std::vector<StatBlock> monsters;
  std::vector<StatBlock> pc_templates;
  std::vector<SpellSpec> spells;
  std::vector<XpThresholds> xp_thresholds;
  std::vector<MultiplierStep> multipliers;
  /// Sorted distinct PC classes; the vocabulary for class features.
  std::vector<std::string> classes;

  std::optional<std::size_t> monster_index(std::string_view id) const {
    return find(monsters, id);
  }
  std::optional<std::size_t> pc_index(std::string_view id) const { return find(pc_templates, id); }
  std::optional<std::size_t> spell_index(std::string_view id) const {
    for (std::size_t i = 0; i < spells.size(); ++i)
      if (spells[i].id == id) return i;
    return std::nullopt;
  }
  std::optional<std::size_t> class_index(std::string_view cls) const {
    auto it = std::lower_bound(classes.begin(), classes.end(), cls);
    if (it == classes.end() || *it != cls) return std::nullopt;
    return static_cast<std::size_t>(it - classes.begin());
  }

  /// Multiplier (x1000) for an encounter of `count` enemies.
  int multiplier_permille(std::size_t count) const {
    int m = 1000;
    for (const auto& step : multipliers)
      if (static_cast<std::size_t>(step.min_count) <= count) m = step.permille;
    return m;
  }

 private:
  static std::optional<std::size_t> find(const std::vector<StatBlock>& v, std::string_view id) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i].id == id) return i;
    return std::nullopt;
  }
};

/// The four documents a pack is made of, keyed by file name.
struct PackDocuments {
  ordered_json monsters;
  ordered_json pc_templates;
  ordered_json spells;
  ordered_json xp_tables;
};

namespace detail {

/// Typed field access that reports the JSON path of the first violation.
class FieldReader {
 public:
  FieldReader(const ordered_json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) fail("", "expected object");
  }

  const std::string& path() const { return path_; }
  std::string at(std::string_view key) const { return path_ + "." + std::string(key); }

  bool has(std::string_view key) const {
    auto it = node_.find(std::string(key));
    return it != node_.end() && !it->is_null();
  }

  const ordered_json& raw(std::string_view key) const {
    auto it = node_.find(std::string(key));
    if (it == node_.end()) fail(key, "missing field");
    return *it;
  }

  long long integer(std::string_view key, long long lo, long long hi) const {
    const auto& v = raw(key);
    if (!v.is_number_integer()) fail(key, "expected integer");
    const auto x = v.get<long long>();
    if (x < lo || x > hi)
      fail(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
    return x;
  }

  double number(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_number()) fail(key, "expected number");
    return v.get<double>();
  }

  bool boolean(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) fail(key, "expected boolean");
    return v.get<bool>();
  }

  std::string string(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_string() || v.get<std::string>().empty()) fail(key, "expected non-empty string");
    return v.get<std::string>();
  }

  const ordered_json& array(std::string_view key) const {
    const auto& v = raw(key);
    if (!v.is_array()) fail(key, "expected array");
    return v;
  }

  std::vector<std::string> strings(std::string_view key) const {
    std::vector<std::string> out;
    const auto& arr = array(key);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string())
        throw Error(ErrorCode::SchemaViolation, "expected string", at(key) + "[" + std::to_string(i) + "]");
      out.push_back(arr[i].get<std::string>());
    }
    return out;
  }

  template <std::size_t N>
  std::size_t tag(std::string_view key, const std::array<std::string_view, N>& tags) const {
    const auto s = string(key);
    auto idx = tag_index(tags, s);
    if (!idx) fail(key, "unknown tag '" + s + "'");
    return *idx;
  }

  [[noreturn]] void fail(std::string_view key, const std::string& msg) const {
    throw Error(ErrorCode::SchemaViolation, msg, key.empty() ? path_ : at(key));
  }

 private:
  const ordered_json& node_;
  std::string path_;
};

template <std::size_t N>
std::bitset<N> read_tag_set(const FieldReader& r, std::string_view key,
                            const std::array<std::string_view, N>& tags) {
  std::bitset<N> out;
  const auto values = r.strings(key);
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto idx = tag_index(tags, values[i]);
    if (!idx)
      throw Error(ErrorCode::SchemaViolation, "unknown tag '" + values[i] + "'",
                  r.at(key) + "[" + std::to_string(i) + "]");
    out.set(*idx);
  }
  return out;
}

inline DiceExpr read_dice(const FieldReader& r, std::string_view key) {
  const auto text = r.string(key);
  try {
    return parse_dice(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::SchemaViolation, e.message(), r.at(key));
  }
}

inline int read_int(const FieldReader& r, std::string_view key, long long lo, long long hi) {
  return static_cast<int>(r.integer(key, lo, hi));
}

inline AttackSpec read_attack(const ordered_json& node, const std::string& path) {
  FieldReader r(node, path);
  AttackSpec a;
  a.name = r.string("name");
  a.to_hit_bonus = read_int(r, "to_hit", -20, 30);
  a.damage = read_dice(r, "damage");
  a.damage_type = static_cast<DamageType>(r.tag("damage_type", kDamageTypeTags));
  static constexpr std::array<std::string_view, 2> kRanges = {"melee", "ranged"};
  a.range_kind = static_cast<RangeKind>(r.tag("range", kRanges));
  a.count = read_int(r, "count", 1, 10);
  if (r.has("uses_per_combat")) a.uses_per_combat = read_int(r, "uses_per_combat", 1, 1000);
  static constexpr std::array<std::string_view, 2> kCosts = {"action", "bonus"};
  a.action = static_cast<ActionCost>(r.tag("action", kCosts));
  if (r.has("on_hit")) {
    FieldReader h(r.raw("on_hit"), r.at("on_hit"));
    OnHitEffect e;
    e.condition = static_cast<Condition>(h.tag("condition", kConditionTags));
    e.save = static_cast<Ability>(h.tag("save", kAbilityTags));
    e.dc = read_int(h, "dc", 1, 30);
    e.rounds = read_int(h, "rounds", 1, 100);
    a.on_hit = e;
  }
  return a;
}

inline Traits parse_traits(const std::vector<std::string>& tags, const std::string& path) {
  Traits t;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const std::string field = path + "[" + std::to_string(i) + "]";
    std::string_view tag = tags[i];
    std::string_view param;
    if (auto colon = tag.find(':'); colon != std::string_view::npos) {
      param = tag.substr(colon + 1);
      tag = tag.substr(0, colon);
    }
    if (!tag_index(kSpecialAbilityTags, tag))
      throw Error(ErrorCode::DanglingReference, "unknown special ability '" + tags[i] + "'", field);
    const auto need_int = [&](int lo) {
      int v = 0;
      if (!detail::parse_int(param, v) || v < lo)
        throw Error(ErrorCode::SchemaViolation, "bad parameter for '" + tags[i] + "'", field);
      return v;
    };
    if (tag == "pack_tactics") t.pack_tactics = true;
    else if (tag == "regeneration") t.regeneration = need_int(1);
    else if (tag == "sneak_attack" || tag == "martial_advantage") {
      try {
        t.sneak_attack = parse_dice(param);
      } catch (const Error& e) {
        throw Error(ErrorCode::SchemaViolation, e.message(), field);
      }
    } else if (tag == "second_wind") t.second_wind = true;
    else if (tag == "action_surge") t.action_surge = true;
    else if (tag == "rage") t.rage_uses = need_int(1);
    else if (tag == "divine_smite") t.divine_smite = true;
    else if (tag == "lay_on_hands") t.lay_on_hands = need_int(1);
    else if (tag == "uncanny_dodge") t.uncanny_dodge = true;
  }
  return t;
}

inline StatBlock read_stat_block(const ordered_json& node, const std::string& path, Kind expected) {
  FieldReader r(node, path);
  StatBlock s;
  s.id = r.string("id");
  s.name = r.string("name");
  static constexpr std::array<std::string_view, 2> kKinds = {"pc", "monster"};
  s.kind = static_cast<Kind>(r.tag("kind", kKinds));
  if (s.kind != expected) r.fail("kind", expected == Kind::Pc ? "expected 'pc'" : "expected 'monster'");
  if (s.kind == Kind::Pc) {
    s.character_class = r.string("class");
    s.level = read_int(r, "level", 1, 20);
  } else {
    s.challenge_rating = r.string("cr");
  }
  s.hp_max = read_int(r, "hp_max", 1, 10000);
  s.ac = read_int(r, "ac", 1, 40);
  {
    FieldReader a(r.raw("abilities"), r.at("abilities"));
    for (std::size_t i = 0; i < kAbilityCount; ++i)
      s.abilities.scores[i] = read_int(a, kAbilityTags[i], 1, 30);
  }
  s.proficiency_bonus = read_int(r, "proficiency_bonus", 2, 9);
  s.save_proficiencies = read_tag_set(r, "save_proficiencies", kAbilityTags);
  s.resistances = read_tag_set(r, "resistances", kDamageTypeTags);
  s.immunities = read_tag_set(r, "immunities", kDamageTypeTags);
  const auto& attacks = r.array("attacks");
  for (std::size_t i = 0; i < attacks.size(); ++i)
    s.attacks.push_back(read_attack(attacks[i], r.at("attacks") + "[" + std::to_string(i) + "]"));
  if (s.kind == Kind::Monster && s.attacks.empty()) r.fail("attacks", "monsters need at least one attack");
  s.spells = r.strings("spells");
  const auto& slots = r.array("spell_slots");
  if (slots.size() != kMaxSpellLevel) r.fail("spell_slots", "expected 5 entries (levels 1-5)");
  for (std::size_t i = 0; i < kMaxSpellLevel; ++i) {
    if (!slots[i].is_number_integer() || slots[i].get<int>() < 0 || slots[i].get<int>() > 9)
      throw Error(ErrorCode::SchemaViolation, "expected slot count in [0, 9]",
                  r.at("spell_slots") + "[" + std::to_string(i) + "]");
    s.spell_slots[i] = slots[i].get<int>();
  }
  if (r.has("spellcasting_ability"))
    s.spellcasting_ability = static_cast<Ability>(r.tag("spellcasting_ability", kAbilityTags));
  s.special_abilities = r.strings("special_abilities");
  s.traits = parse_traits(s.special_abilities, r.at("special_abilities"));
  s.xp_value = read_int(r, "xp_value", 0, 1000000);
  if (s.kind == Kind::Pc && s.xp_value != 0) r.fail("xp_value", "PCs carry no XP value");
  if (s.kind == Kind::Monster && s.xp_value <= 0) r.fail("xp_value", "monster XP must be positive");
  s.initiative_bonus = read_int(r, "initiative_bonus", -10, 20);
  return s;
}

inline SpellSpec read_spell(const ordered_json& node, const std::string& path) {
  FieldReader r(node, path);
  SpellSpec s;
  s.id = r.string("id");
  s.name = r.string("name");
  s.level = read_int(r, "level", 0, static_cast<long long>(kMaxSpellLevel));
  s.effect = static_cast<SpellEffect>(r.tag("effect", kSpellEffectTags));
  static constexpr std::array<std::string_view, 2> kCosts = {"action", "bonus"};
  s.action = static_cast<ActionCost>(r.tag("action", kCosts));
  switch (s.effect) {
    case SpellEffect::Attack:
    case SpellEffect::AutoDamage:
      s.damage = read_dice(r, "damage");
      s.damage_type = static_cast<DamageType>(r.tag("damage_type", kDamageTypeTags));
      s.rays = read_int(r, "rays", 1, 10);
      s.add_modifier = r.boolean("add_modifier", false);
      break;
    case SpellEffect::SaveDamage:
      s.save = static_cast<Ability>(r.tag("save", kAbilityTags));
      s.damage = read_dice(r, "damage");
      s.damage_type = static_cast<DamageType>(r.tag("damage_type", kDamageTypeTags));
      s.half_on_save = r.boolean("half_on_save", false);
      s.targets = read_int(r, "targets", 1, 8);
      break;
    case SpellEffect::Heal:
      s.heal = read_dice(r, "heal");
      s.add_modifier = r.boolean("add_modifier", false);
      break;
    case SpellEffect::Buff:
      s.condition = static_cast<Condition>(r.tag("condition", kConditionTags));
      s.rounds = read_int(r, "rounds", 1, 100);
      s.targets = read_int(r, "targets", 1, 8);
      s.self_only = r.boolean("self_only", false);
      break;
    case SpellEffect::Condition:
      s.save = static_cast<Ability>(r.tag("save", kAbilityTags));
      s.condition = static_cast<Condition>(r.tag("condition", kConditionTags));
      s.rounds = read_int(r, "rounds", 1, 100);
      s.targets = read_int(r, "targets", 1, 8);
      break;
    case SpellEffect::Summon:
      s.summon_id = r.string("summon");
      s.summon_count = read_int(r, "count", 1, 8);
      break;
  }
  return s;
}

inline void check_schema_version(const ordered_json& doc, const std::string& file) {
  if (!doc.is_object()) throw Error(ErrorCode::SchemaViolation, "expected object", file);
  FieldReader r(doc, file);
  if (r.integer("schema_version", 0, 1000000) != kContentSchemaVersion)
    r.fail("schema_version", "unsupported schema version");
}

inline ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, e.what(), path.filename().string());
  }
}

}  // namespace detail

/// Builds and validates a pack from its four documents.
inline ContentPack parse_content_pack(const PackDocuments& docs) {
  using detail::FieldReader;
  ContentPack pack;

  detail::check_schema_version(docs.spells, "spells");
  {
    const auto& arr = FieldReader(docs.spells, "spells").array("spells");
    for (std::size_t i = 0; i < arr.size(); ++i)
      pack.spells.push_back(detail::read_spell(arr[i], "spells.spells[" + std::to_string(i) + "]"));
  }
  detail::check_schema_version(docs.monsters, "monsters");
  {
    const auto& arr = FieldReader(docs.monsters, "monsters").array("monsters");
    for (std::size_t i = 0; i < arr.size(); ++i)
      pack.monsters.push_back(
          detail::read_stat_block(arr[i], "monsters.monsters[" + std::to_string(i) + "]", Kind::Monster));
  }
  detail::check_schema_version(docs.pc_templates, "pc_templates");
  {
    const auto& arr = FieldReader(docs.pc_templates, "pc_templates").array("pc_templates");
    for (std::size_t i = 0; i < arr.size(); ++i)
      pack.pc_templates.push_back(
          detail::read_stat_block(arr[i], "pc_templates.pc_templates[" + std::to_string(i) + "]", Kind::Pc));
  }
  detail::check_schema_version(docs.xp_tables, "xp_tables");
  {
    FieldReader r(docs.xp_tables, "xp_tables");
    const auto& thresholds = r.array("xp_thresholds");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      FieldReader t(thresholds[i], r.at("xp_thresholds") + "[" + std::to_string(i) + "]");
      XpThresholds x;
      x.level = detail::read_int(t, "level", 1, 30);
      for (std::size_t k = 0; k < kTierTags.size(); ++k)
        x.per_tier[k] = detail::read_int(t, kTierTags[k], 0, 1000000);
      pack.xp_thresholds.push_back(x);
    }
    const auto& mults = r.array("multipliers");
    if (mults.empty()) r.fail("multipliers", "multiplier table is empty");
    for (std::size_t i = 0; i < mults.size(); ++i) {
      FieldReader m(mults[i], r.at("multipliers") + "[" + std::to_string(i) + "]");
      MultiplierStep step;
      step.min_count = detail::read_int(m, "min_count", 1, 1000);
      step.multiplier = m.number("multiplier");
      if (!(step.multiplier >= 1.0) || step.multiplier > 100.0)
        m.fail("multiplier", "multiplier must be in [1, 100]");
      step.permille = static_cast<int>(std::lround(step.multiplier * 1000.0));
      if (!pack.multipliers.empty()) {
        const auto& prev = pack.multipliers.back();
        if (step.min_count <= prev.min_count) m.fail("min_count", "thresholds must be strictly increasing");
        if (step.permille < prev.permille) m.fail("multiplier", "multipliers must be non-decreasing");
      } else if (step.min_count != 1) {
        m.fail("min_count", "first step must start at 1 enemy");
      }
      pack.multipliers.push_back(step);
    }
  }

  // Cross references and pool invariants.
  const auto check_unique = [](const auto& items, const std::string& where) {
    std::vector<std::string> ids;
    for (const auto& it : items) ids.push_back(it.id);
    std::sort(ids.begin(), ids.end());
    if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end())
      throw Error(ErrorCode::SchemaViolation, "duplicate id '" + *dup + "'", where);
  };
  check_unique(pack.spells, "spells.spells");
  check_unique(pack.monsters, "monsters.monsters");
  check_unique(pack.pc_templates, "pc_templates.pc_templates");

  for (auto& spell : pack.spells) {
    if (spell.effect != SpellEffect::Summon) continue;
    auto idx = pack.monster_index(spell.summon_id);
    if (!idx)
      throw Error(ErrorCode::DanglingReference, "summon '" + spell.summon_id + "' not in monster pool",
                  "spells.spells[" + spell.id + "].summon");
    spell.summon_index = *idx;
  }
  const auto resolve_spells = [&](std::vector<StatBlock>& blocks, const std::string& file) {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      auto& s = blocks[b];
      for (std::size_t i = 0; i < s.spells.size(); ++i) {
        auto idx = pack.spell_index(s.spells[i]);
        if (!idx)
          throw Error(ErrorCode::DanglingReference, "spell '" + s.spells[i] + "' not defined",
                      file + "[" + std::to_string(b) + "].spells[" + std::to_string(i) + "]");
        s.spell_indices.push_back(*idx);
      }
      if (!s.spells.empty() && !s.spellcasting_ability)
        throw Error(ErrorCode::SchemaViolation, "spellcaster without spellcasting_ability",
                    file + "[" + std::to_string(b) + "].spellcasting_ability");
    }
  };
  resolve_spells(pack.monsters, "monsters.monsters");
  resolve_spells(pack.pc_templates, "pc_templates.pc_templates");

  if (pack.monsters.size() != kMonsterPoolSize)
    throw Error(ErrorCode::PoolSizeMismatch,
                "monster pool has " + std::to_string(pack.monsters.size()) + " entries, expected " +
                    std::to_string(kMonsterPoolSize),
                "monsters.monsters");
  if (pack.pc_templates.size() < 8)
    throw Error(ErrorCode::SchemaViolation, "need at least 8 PC templates", "pc_templates.pc_templates");
  for (std::size_t i = 0; i < pack.pc_templates.size(); ++i)
    if (pack.pc_templates[i].level != kPartyLevel)
      throw Error(ErrorCode::SchemaViolation, "PC templates must be level 5",
                  "pc_templates.pc_templates[" + std::to_string(i) + "].level");
  for (const auto& pc : pack.pc_templates) pack.classes.push_back(pc.character_class);
  std::sort(pack.classes.begin(), pack.classes.end());
  pack.classes.erase(std::unique(pack.classes.begin(), pack.classes.end()), pack.classes.end());
  if (pack.classes.size() < 8)
    throw Error(ErrorCode::SchemaViolation, "PC templates must span at least 8 classes",
                "pc_templates.pc_templates");
  return pack;
}

inline ContentPack load_content_pack(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::MissingFile, "content pack directory not found: " + dir.string());
  PackDocuments docs;
  docs.monsters = detail::read_json_file(dir / "monsters.json");
  docs.pc_templates = detail::read_json_file(dir / "pc_templates.json");
  docs.spells = detail::read_json_file(dir / "spells.json");
  docs.xp_tables = detail::read_json_file(dir / "xp_tables.json");
  return parse_content_pack(docs);
}

// ---------------------------------------------------------------------------
// Canonical serialization. Field order is fixed; optional fields appear only
// when set, so serialize(load(file)) reproduces a canonical file byte-for-byte.

inline ordered_json to_json(const AttackSpec& a) {
  ordered_json j;
  j["name"] = a.name;
  j["to_hit"] = a.to_hit_bonus;
  j["damage"] = a.damage.to_string();
  j["damage_type"] = kDamageTypeTags[static_cast<std::size_t>(a.damage_type)];
  j["range"] = a.range_kind == RangeKind::Melee ? "melee" : "ranged";
  j["count"] = a.count;
  j["uses_per_combat"] = a.uses_per_combat ? ordered_json(*a.uses_per_combat) : ordered_json(nullptr);
  j["action"] = a.action == ActionCost::Action ? "action" : "bonus";
  if (a.on_hit) {
    ordered_json h;
    h["condition"] = kConditionTags[static_cast<std::size_t>(a.on_hit->condition)];
    h["save"] = kAbilityTags[static_cast<std::size_t>(a.on_hit->save)];
    h["dc"] = a.on_hit->dc;
    h["rounds"] = a.on_hit->rounds;
    j["on_hit"] = h;
  }
  return j;
}

template <std::size_t N>
ordered_json tag_set_json(const std::bitset<N>& bits, const std::array<std::string_view, N>& tags) {
  ordered_json arr = ordered_json::array();
  for (std::size_t i = 0; i < N; ++i)
    if (bits.test(i)) arr.push_back(tags[i]);
  return arr;
}

inline ordered_json to_json(const StatBlock& s) {
  ordered_json j;
  j["id"] = s.id;
  j["name"] = s.name;
  j["kind"] = s.kind == Kind::Pc ? "pc" : "monster";
  if (s.kind == Kind::Pc) {
    j["class"] = s.character_class;
    j["level"] = s.level;
  } else {
    j["cr"] = s.challenge_rating;
  }
  j["hp_max"] = s.hp_max;
  j["ac"] = s.ac;
  ordered_json ab;
  for (std::size_t i = 0; i < kAbilityCount; ++i) ab[std::string(kAbilityTags[i])] = s.abilities.scores[i];
  j["abilities"] = ab;
  j["proficiency_bonus"] = s.proficiency_bonus;
  j["save_proficiencies"] = tag_set_json(s.save_proficiencies, kAbilityTags);
  j["resistances"] = tag_set_json(s.resistances, kDamageTypeTags);
  j["immunities"] = tag_set_json(s.immunities, kDamageTypeTags);
  ordered_json attacks = ordered_json::array();
  for (const auto& a : s.attacks) attacks.push_back(to_json(a));
  j["attacks"] = attacks;
  j["spells"] = s.spells;
  j["spell_slots"] = s.spell_slots;
  j["spellcasting_ability"] = s.spellcasting_ability
                                  ? ordered_json(kAbilityTags[static_cast<std::size_t>(*s.spellcasting_ability)])
                                  : ordered_json(nullptr);
  j["special_abilities"] = s.special_abilities;
  j["xp_value"] = s.xp_value;
  j["initiative_bonus"] = s.initiative_bonus;
  return j;
}

inline ordered_json to_json(const SpellSpec& s) {
  ordered_json j;
  j["id"] = s.id;
  j["name"] = s.name;
  j["level"] = s.level;
  j["effect"] = kSpellEffectTags[static_cast<std::size_t>(s.effect)];
  j["action"] = s.action == ActionCost::Action ? "action" : "bonus";
  switch (s.effect) {
    case SpellEffect::Attack:
    case SpellEffect::AutoDamage:
      j["damage"] = s.damage.to_string();
      j["damage_type"] = kDamageTypeTags[static_cast<std::size_t>(s.damage_type)];
      j["rays"] = s.rays;
      if (s.add_modifier) j["add_modifier"] = true;
      break;
    case SpellEffect::SaveDamage:
      j["save"] = kAbilityTags[static_cast<std::size_t>(s.save)];
      j["damage"] = s.damage.to_string();
      j["damage_type"] = kDamageTypeTags[static_cast<std::size_t>(s.damage_type)];
      j["half_on_save"] = s.half_on_save;
      j["targets"] = s.targets;
      break;
    case SpellEffect::Heal:
      j["heal"] = s.heal.to_string();
      j["add_modifier"] = s.add_modifier;
      break;
    case SpellEffect::Buff:
      j["condition"] = kConditionTags[static_cast<std::size_t>(s.condition)];
      j["rounds"] = s.rounds;
      j["targets"] = s.targets;
      if (s.self_only) j["self_only"] = true;
      break;
    case SpellEffect::Condition:
      j["save"] = kAbilityTags[static_cast<std::size_t>(s.save)];
      j["condition"] = kConditionTags[static_cast<std::size_t>(s.condition)];
      j["rounds"] = s.rounds;
      j["targets"] = s.targets;
      break;
    case SpellEffect::Summon:
      j["summon"] = s.summon_id;
      j["count"] = s.summon_count;
      break;
  }
  return j;
}

inline PackDocuments serialize_content_pack(const ContentPack& pack) {
  PackDocuments docs;
  const auto blocks = [](const std::vector<StatBlock>& v) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : v) arr.push_back(to_json(s));
    return arr;
  };
  docs.monsters["schema_version"] = pack.schema_version;
  docs.monsters["monsters"] = blocks(pack.monsters);
  docs.pc_templates["schema_version"] = pack.schema_version;
  docs.pc_templates["pc_templates"] = blocks(pack.pc_templates);
  docs.spells["schema_version"] = pack.schema_version;
  docs.spells["spells"] = ordered_json::array();
  for (const auto& s : pack.spells) docs.spells["spells"].push_back(to_json(s));
  docs.xp_tables["schema_version"] = pack.schema_version;
  docs.xp_tables["xp_thresholds"] = ordered_json::array();
  for (const auto& t : pack.xp_thresholds) {
    ordered_json row;
    row["level"] = t.level;
    for (std::size_t k = 0; k < kTierTags.size(); ++k) row[std::string(kTierTags[k])] = t.per_tier[k];
    docs.xp_tables["xp_thresholds"].push_back(row);
  }
  docs.xp_tables["multipliers"] = ordered_json::array();
  for (const auto& m : pack.multipliers) {
    ordered_json row;
    row["min_count"] = m.min_count;
    row["multiplier"] = m.multiplier;
    docs.xp_tables["multipliers"].push_back(row);
  }
  return docs;
}

/// Text of one pack file in canonical form (2-space indent, trailing newline).
inline std::string canonical_text(const ordered_json& doc) { return doc.dump(2) + "\n"; }

inline void write_content_pack(const ContentPack& pack, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto docs = serialize_content_pack(pack);
  const std::pair<const char*, const ordered_json*> files[] = {{"monsters.json", &docs.monsters},
                                                               {"pc_templates.json", &docs.pc_templates},
                                                               {"spells.json", &docs.spells},
                                                               {"xp_tables.json", &docs.xp_tables}};
  for (const auto& [name, doc] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, std::string("cannot write ") + name);
    out << canonical_text(*doc);
  }
}

}  // namespace ntrl
