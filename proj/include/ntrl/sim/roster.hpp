#pragma once

#include <cstddef>
#include <cstdio>
#include <string>
#include <vector>

#include "ntrl/content/xp.hpp"

namespace ntrl {

inline constexpr std::size_t kMinPartySize = 3;
inline constexpr std::size_t kMaxPartySize = 8;
inline constexpr std::size_t kMaxEnemies = 8;

struct PartyMember {
  std::size_t template_index = 0;
  int hp_current = 0;
  friend bool operator==(const PartyMember&, const PartyMember&) = default;
};

/// 3-8 level-5 PCs built from the pack's templates.
struct Party {
  std::vector<PartyMember> members;
  friend bool operator==(const Party&, const Party&) = default;
};

/// 1-8 monsters drawn with repetition from the pool; entries are pool indices.
struct Encounter {
  std::vector<std::size_t> enemies;
  friend bool operator==(const Encounter&, const Encounter&) = default;
};

inline Party full_hp_party(std::span<const std::size_t> templates, const ContentPack& pack) {
  Party p;
  for (auto t : templates) p.members.push_back({t, pack.pc_templates.at(t).hp_max});
  return p;
}

inline void validate_party(const Party& party, const ContentPack& pack) {
  const auto n = party.members.size();
  if (n < kMinPartySize || n > kMaxPartySize)
    throw Error(ErrorCode::InvalidParty, "party size " + std::to_string(n) + " outside [3, 8]", "members");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = party.members[i];
    const std::string field = "members[" + std::to_string(i) + "]";
    if (m.template_index >= pack.pc_templates.size())
      throw Error(ErrorCode::InvalidParty, "unknown PC template", field);
    const auto& t = pack.pc_templates[m.template_index];
    if (t.level != kPartyLevel) throw Error(ErrorCode::InvalidParty, "party members must be level 5", field);
    if (m.hp_current < 1 || m.hp_current > t.hp_max)
      throw Error(ErrorCode::InvalidParty, "hp_current outside [1, hp_max]", field + ".hp_current");
  }
}

inline void validate_encounter(const Encounter& e, const ContentPack& pack) {
  if (e.enemies.empty()) throw Error(ErrorCode::EmptyEncounter, "encounter has no enemies", "encounter");
  if (e.enemies.size() > kMaxEnemies)
    throw Error(ErrorCode::InvalidEncounter,
                "encounter has " + std::to_string(e.enemies.size()) + " enemies, at most 8 allowed", "encounter");
  for (std::size_t i = 0; i < e.enemies.size(); ++i)
    if (e.enemies[i] >= pack.monsters.size())
      throw Error(ErrorCode::InvalidEncounter, "monster not in pool", "encounter[" + std::to_string(i) + "]");
}

inline std::vector<int> party_levels(const Party& party, const ContentPack& pack) {
  std::vector<int> levels;
  for (const auto& m : party.members) levels.push_back(pack.pc_templates.at(m.template_index).level);
  return levels;
}

inline XpBudget party_xp_budget(const Party& party, Tier tier, const ContentPack& pack) {
  const auto levels = party_levels(party, pack);
  return party_xp_budget(std::span<const int>(levels), tier, pack);
}

inline long long raw_encounter_xp(const Encounter& e, const ContentPack& pack) {
  return raw_encounter_xp(std::span<const std::size_t>(e.enemies), pack);
}
inline long long adjusted_encounter_xp(const Encounter& e, const ContentPack& pack) {
  return adjusted_encounter_xp(std::span<const std::size_t>(e.enemies), pack);
}

// ---------------------------------------------------------------------------
// JSON forms. A party is {"members": [{"template": id, "hp_current": n}, ...]};
// a bare array of template ids is accepted as a full-HP party. An encounter is
// an array of monster ids or {"enemies": [...]}.

inline ordered_json party_to_json(const Party& party, const ContentPack& pack) {
  ordered_json members = ordered_json::array();
  for (const auto& m : party.members) {
    const auto& t = pack.pc_templates.at(m.template_index);
    ordered_json j;
    j["template"] = t.id;
    j["class"] = t.character_class;
    j["level"] = t.level;
    j["hp_current"] = m.hp_current;
    j["hp_max"] = t.hp_max;
    members.push_back(j);
  }
  ordered_json out;
  out["members"] = members;
  return out;
}

inline Party party_from_json(const json& j, const ContentPack& pack) {
  const json& members = j.is_object() && j.contains("members") ? j.at("members") : j;
  if (!members.is_array()) throw Error(ErrorCode::InvalidParty, "expected array of members", "members");
  Party p;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& m = members[i];
    const std::string field = "members[" + std::to_string(i) + "]";
    std::string id;
    if (m.is_string()) id = m.get<std::string>();
    else if (m.is_object() && m.contains("template") && m["template"].is_string()) id = m["template"].get<std::string>();
    else throw Error(ErrorCode::InvalidParty, "expected template id", field);
    auto idx = pack.pc_index(id);
    if (!idx) throw Error(ErrorCode::UnknownClass, "unknown PC template '" + id + "'", field);
    PartyMember pm{*idx, pack.pc_templates[*idx].hp_max};
    if (m.is_object() && m.contains("hp_current")) {
      if (!m["hp_current"].is_number_integer())
        throw Error(ErrorCode::InvalidParty, "hp_current must be an integer", field + ".hp_current");
      pm.hp_current = m["hp_current"].get<int>();
    }
    p.members.push_back(pm);
  }
  validate_party(p, pack);
  return p;
}

inline ordered_json encounter_to_json(const Encounter& e, const ContentPack& pack) {
  ordered_json arr = ordered_json::array();
  for (auto i : e.enemies) arr.push_back(pack.monsters.at(i).id);
  return arr;
}

inline Encounter encounter_from_json(const json& j, const ContentPack& pack) {
  const json& arr = j.is_object() && j.contains("enemies") ? j.at("enemies") : j;
  if (!arr.is_array()) throw Error(ErrorCode::InvalidEncounter, "expected array of monster ids", "encounter");
  Encounter e;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string field = "encounter[" + std::to_string(i) + "]";
    if (!arr[i].is_string()) throw Error(ErrorCode::InvalidEncounter, "expected monster id", field);
    auto idx = pack.monster_index(arr[i].get<std::string>());
    if (!idx) throw Error(ErrorCode::InvalidEncounter, "unknown monster '" + arr[i].get<std::string>() + "'", field);
    e.enemies.push_back(*idx);
  }
  validate_encounter(e, pack);
  return e;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Stable digest of a party (template ids and current HP, in roster order).
inline std::string party_digest(const Party& party, const ContentPack& pack) {
  return hex64(fnv1a64(party_to_json(party, pack).dump()));
}

}  // namespace ntrl
