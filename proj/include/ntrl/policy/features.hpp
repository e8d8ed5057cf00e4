#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "ntrl/sim/roster.hpp"

namespace ntrl {

/// Fixed normalisers for numeric inputs; shipped with the architecture so the
/// encoding never depends on batch statistics.
struct FeatureScales {
  double hp = 100.0;
  double ac = 20.0;
  double ability = 20.0;
  double proficiency = 6.0;
  double slots = 4.0;
  double level = 20.0;
  double party_size = 8.0;
  double synergy = 8.0;
  friend bool operator==(const FeatureScales&, const FeatureScales&) = default;
};

inline constexpr int kArchitectureVersion = 1;
/// hp_current, hp_max, ac, six ability scores, proficiency, five slot levels, level.
inline constexpr std::size_t kNumericFeatures = 16;
inline constexpr std::size_t kSaveVocab = kAbilityCount;
inline constexpr std::size_t kResistanceVocab = kDamageTypeCount;
inline constexpr std::size_t kSpecialVocab = kSpecialAbilityTags.size();

/// Shape and vocabulary of a policy network. Two networks are interchangeable
/// iff their configs compare equal.
struct ArchitectureConfig {
  int version = kArchitectureVersion;
  std::size_t max_members = kMaxPartySize;
  std::size_t hidden = 128;
  std::size_t class_embedding = 16;
  std::size_t group_embedding = 8;
  std::size_t synergy_embedding = 32;
  std::size_t max_picks = kMaxEnemies;
  std::vector<std::string> monsters;
  std::vector<std::string> classes;
  std::vector<std::string> spells;
  FeatureScales scales{};

  std::size_t pool_size() const noexcept { return monsters.size(); }
  std::size_t actions() const noexcept { return monsters.size() + 1; }
  std::size_t stop_action() const noexcept { return monsters.size(); }
  std::size_t categorical_width() const noexcept { return class_embedding + 4 * group_embedding; }
  /// Pooled numeric branch, pooled categorical branch, party size, synergy branch.
  std::size_t head_width() const noexcept { return 3 * hidden + 1; }

  friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;

  static ArchitectureConfig from_pack(const ContentPack& pack) {
    ArchitectureConfig a;
    for (const auto& m : pack.monsters) a.monsters.push_back(m.id);
    a.classes = pack.classes;
    for (const auto& s : pack.spells) a.spells.push_back(s.id);
    return a;
  }
};

inline ordered_json to_json(const ArchitectureConfig& a) {
  ordered_json j;
  j["version"] = a.version;
  j["max_members"] = a.max_members;
  j["hidden"] = a.hidden;
  j["class_embedding"] = a.class_embedding;
  j["group_embedding"] = a.group_embedding;
  j["synergy_embedding"] = a.synergy_embedding;
  j["max_picks"] = a.max_picks;
  j["monsters"] = a.monsters;
  j["classes"] = a.classes;
  j["spells"] = a.spells;
  j["scales"] = ordered_json{{"hp", a.scales.hp},
                             {"ac", a.scales.ac},
                             {"ability", a.scales.ability},
                             {"proficiency", a.scales.proficiency},
                             {"slots", a.scales.slots},
                             {"level", a.scales.level},
                             {"party_size", a.scales.party_size},
                             {"synergy", a.scales.synergy}};
  return j;
}

inline ArchitectureConfig architecture_from_json(const json& j) {
  ArchitectureConfig a;
  a.version = j.at("version").get<int>();
  a.max_members = j.at("max_members").get<std::size_t>();
  a.hidden = j.at("hidden").get<std::size_t>();
  a.class_embedding = j.at("class_embedding").get<std::size_t>();
  a.group_embedding = j.at("group_embedding").get<std::size_t>();
  a.synergy_embedding = j.at("synergy_embedding").get<std::size_t>();
  a.max_picks = j.at("max_picks").get<std::size_t>();
  a.monsters = j.at("monsters").get<std::vector<std::string>>();
  a.classes = j.at("classes").get<std::vector<std::string>>();
  a.spells = j.at("spells").get<std::vector<std::string>>();
  const auto& s = j.at("scales");
  a.scales.hp = s.at("hp").get<double>();
  a.scales.ac = s.at("ac").get<double>();
  a.scales.ability = s.at("ability").get<double>();
  a.scales.proficiency = s.at("proficiency").get<double>();
  a.scales.slots = s.at("slots").get<double>();
  a.scales.level = s.at("level").get<double>();
  a.scales.party_size = s.at("party_size").get<double>();
  a.scales.synergy = s.at("synergy").get<double>();
  return a;
}

/// Padded per-member encoding of a party. Row r of each block belongs to
/// member r; rows past the party size are zero with mask 0.
struct PartyFeatures {
  std::size_t members = 0;
  std::vector<double> numeric;       // max_members x kNumericFeatures
  std::vector<int> class_ids;        // max_members, -1 when padded
  std::vector<double> saves;         // max_members x kSaveVocab
  std::vector<double> resistances;   // max_members x kResistanceVocab
  std::vector<double> spells;        // max_members x |spells|
  std::vector<double> specials;      // max_members x kSpecialVocab
  std::vector<double> mask;          // max_members
  friend bool operator==(const PartyFeatures&, const PartyFeatures&) = default;
};

inline std::size_t vocab_index(const std::vector<std::string>& vocab, std::string_view id, ErrorCode code,
                               const std::string& field) {
  const auto it = std::find(vocab.begin(), vocab.end(), id);
  if (it == vocab.end()) throw Error(code, "'" + std::string(id) + "' is not in the policy vocabulary", field);
  return static_cast<std::size_t>(it - vocab.begin());
}

inline PartyFeatures encode_party(const Party& party, const ContentPack& pack, const ArchitectureConfig& arch) {
  validate_party(party, pack);
  const std::size_t rows = arch.max_members;
  if (party.members.size() > rows)
    throw Error(ErrorCode::ShapeMismatch, "party larger than the architecture allows", "members");
  PartyFeatures f;
  f.members = party.members.size();
  f.numeric.assign(rows * kNumericFeatures, 0.0);
  f.class_ids.assign(rows, -1);
  f.saves.assign(rows * kSaveVocab, 0.0);
  f.resistances.assign(rows * kResistanceVocab, 0.0);
  f.spells.assign(rows * arch.spells.size(), 0.0);
  f.specials.assign(rows * kSpecialVocab, 0.0);
  f.mask.assign(rows, 0.0);
  const auto& sc = arch.scales;
  for (std::size_t r = 0; r < party.members.size(); ++r) {
    const auto& m = party.members[r];
    const auto& t = pack.pc_templates.at(m.template_index);
    const std::string field = "members[" + std::to_string(r) + "]";
    double* num = f.numeric.data() + r * kNumericFeatures;
    std::size_t k = 0;
    num[k++] = m.hp_current / sc.hp;
    num[k++] = t.hp_max / sc.hp;
    num[k++] = t.ac / sc.ac;
    for (int s : t.abilities.scores) num[k++] = s / sc.ability;
    num[k++] = t.proficiency_bonus / sc.proficiency;
    for (int s : t.spell_slots) num[k++] = s / sc.slots;
    num[k++] = t.level / sc.level;
    f.class_ids[r] = static_cast<int>(vocab_index(arch.classes, t.character_class, ErrorCode::UnknownClass, field + ".class"));
    for (std::size_t a = 0; a < kSaveVocab; ++a) f.saves[r * kSaveVocab + a] = t.save_proficiencies.test(a) ? 1.0 : 0.0;
    for (std::size_t d = 0; d < kResistanceVocab; ++d)
      f.resistances[r * kResistanceVocab + d] = t.resistances.test(d) ? 1.0 : 0.0;
    for (const auto& id : t.spells)
      f.spells[r * arch.spells.size() + vocab_index(arch.spells, id, ErrorCode::ShapeMismatch, field + ".spells")] = 1.0;
    for (const auto& tag : t.special_abilities) {
      const auto base = std::string_view(tag).substr(0, tag.find(':'));
      if (auto i = tag_index(kSpecialAbilityTags, base)) f.specials[r * kSpecialVocab + *i] = 1.0;
    }
    f.mask[r] = 1.0;
  }
  return f;
}

/// Counts of each pool class picked so far.
using Synergy = std::vector<double>;

}  // namespace ntrl
