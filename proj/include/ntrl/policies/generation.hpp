#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "ntrl/content/xp.hpp"
#include "ntrl/sim/rng.hpp"
#include "ntrl/sim/roster.hpp"

namespace ntrl {

enum class Provenance : std::uint8_t { Dm, Rnd, Ntrl, Human };
inline constexpr std::array<std::string_view, 4> kProvenanceTags = {"DM", "RND", "NTRL", "HUMAN"};

struct GenerationContext {
  const Party& party;
  const ContentPack& pack;
  RngStream& rng;
  Tier tier = Tier::Deadly;
};

struct EncounterProposal {
  Encounter encounter;
  long long raw_xp = 0;
  long long adjusted_xp = 0;
  XpBudget budget;
  Provenance provenance = Provenance::Dm;
  /// Per-draw action distributions (26 classes + STOP); filled by the learned policy.
  std::vector<std::vector<double>> probabilities;
};

inline EncounterProposal make_proposal(Encounter e, const Party& party, Tier tier, const ContentPack& pack,
                                       Provenance provenance) {
  EncounterProposal p;
  p.raw_xp = raw_encounter_xp(e, pack);
  p.adjusted_xp = adjusted_encounter_xp(e, pack);
  p.budget = party_xp_budget(party, tier, pack);
  p.encounter = std::move(e);
  p.provenance = provenance;
  return p;
}

inline ordered_json to_json(const XpBudget& b) {
  return ordered_json{{"per_character", b.per_character}, {"total", b.total}, {"tier", tier_name(b.tier)}};
}

inline ordered_json to_json(const EncounterProposal& p, const ContentPack& pack) {
  ordered_json j;
  j["provenance"] = kProvenanceTags[static_cast<std::size_t>(p.provenance)];
  j["encounter"] = encounter_to_json(p.encounter, pack);
  j["raw_xp"] = p.raw_xp;
  j["adjusted_xp"] = p.adjusted_xp;
  j["budget"] = to_json(p.budget);
  j["xp_difference"] = p.budget.total - p.adjusted_xp;
  if (!p.probabilities.empty()) j["probabilities"] = p.probabilities;
  return j;
}

namespace detail {

struct XpGroup {
  long long xp = 0;
  /// Lexicographically smallest monster id with this XP value, and its pool index.
  std::string id;
  std::size_t index = 0;
};

/// Monsters with equal XP are interchangeable for the budget, so the search
/// runs over distinct XP values. Keeping the smallest id per value makes the
/// result independent of pool order and yields the smallest id multiset.
inline std::vector<XpGroup> xp_groups(const ContentPack& pack) {
  std::map<long long, XpGroup> by_xp;
  for (std::size_t i = 0; i < pack.monsters.size(); ++i) {
    const auto& m = pack.monsters[i];
    auto [it, inserted] = by_xp.try_emplace(m.xp_value, XpGroup{m.xp_value, m.id, i});
    if (!inserted && m.id < it->second.id) it->second = XpGroup{m.xp_value, m.id, i};
  }
  std::vector<XpGroup> out;
  for (auto& [xp, g] : by_xp) out.push_back(g);
  return out;
}

struct DmCandidate {
  long long diff = -1;
  std::vector<std::string> ids;  // sorted
  std::vector<std::size_t> indices;

  bool better_than(const DmCandidate& o) const {
    if (o.diff < 0) return true;
    if (diff != o.diff) return diff < o.diff;
    if (ids.size() != o.ids.size()) return ids.size() < o.ids.size();
    return ids < o.ids;
  }
};

class DmSearch {
 public:
  DmSearch(std::vector<XpGroup> groups, const ContentPack& pack, long long budget)
      : groups_(std::move(groups)), pack_(pack), budget_(budget) {}

  DmCandidate run() {
    for (std::size_t k = 1; k <= kMaxEnemies; ++k) {
      permille_ = pack_.multiplier_permille(k);
      counts_.assign(groups_.size(), 0);
      dfs(0, static_cast<int>(k), 0);
    }
    return best_;
  }

 private:
  long long adjusted(long long sum) const { return sum * permille_ / 1000; }

  /// Smallest |adjusted - budget| reachable with `left` more picks from groups[g..].
  long long lower_bound(std::size_t g, int left, long long sum) const {
    const long long lo = adjusted(sum + left * groups_[g].xp);
    const long long hi = adjusted(sum + left * groups_.back().xp);
    if (budget_ < lo) return lo - budget_;
    if (budget_ > hi) return budget_ - hi;
    return 0;
  }

  void dfs(std::size_t g, int left, long long sum) {
    if (left == 0) {
      evaluate(sum);
      return;
    }
    if (g >= groups_.size()) return;
    // Ties must survive pruning so the tie-break sees every optimal multiset.
    if (best_.diff >= 0 && lower_bound(g, left, sum) > best_.diff) return;
    for (int c = left; c >= 0; --c) {
      if (g + 1 == groups_.size() && c != left) break;
      counts_[g] = c;
      dfs(g + 1, left - c, sum + c * groups_[g].xp);
    }
    counts_[g] = 0;
  }

  void evaluate(long long sum) {
    DmCandidate c;
    c.diff = std::llabs(adjusted(sum) - budget_);
    if (best_.diff >= 0 && c.diff > best_.diff) return;
    std::vector<std::pair<std::string, std::size_t>> picks;
    for (std::size_t g = 0; g < groups_.size(); ++g)
      for (int n = 0; n < counts_[g]; ++n) picks.emplace_back(groups_[g].id, groups_[g].index);
    std::sort(picks.begin(), picks.end());
    for (auto& [id, index] : picks) {
      c.ids.push_back(id);
      c.indices.push_back(index);
    }
    if (c.better_than(best_)) best_ = std::move(c);
  }

  std::vector<XpGroup> groups_;
  const ContentPack& pack_;
  long long budget_;
  int permille_ = 1000;
  std::vector<int> counts_;
  DmCandidate best_;
};

}  // namespace detail

/// Exact search over all multisets of 1-8 pool monsters for the one whose
/// adjusted XP is closest to the party budget. Ties go to fewer enemies, then
/// to the lexicographically smallest sorted id list.
inline Encounter dm_encounter_for_budget(long long budget, const ContentPack& pack) {
  detail::DmSearch search(detail::xp_groups(pack), pack, budget);
  return Encounter{search.run().indices};
}

inline EncounterProposal generate_dm(const GenerationContext& ctx) {
  const auto budget = party_xp_budget(ctx.party, ctx.tier, ctx.pack);
  return make_proposal(dm_encounter_for_budget(budget.total, ctx.pack), ctx.party, ctx.tier, ctx.pack,
                       Provenance::Dm);
}

/// Enemy count uniform in [1, 8], each enemy uniform over the pool, budget ignored.
inline EncounterProposal generate_rnd(const GenerationContext& ctx) {
  Encounter e;
  const int n = ctx.rng.between(1, static_cast<int>(kMaxEnemies));
  for (int i = 0; i < n; ++i) e.enemies.push_back(static_cast<std::size_t>(ctx.rng.below(ctx.pack.monsters.size())));
  return make_proposal(std::move(e), ctx.party, ctx.tier, ctx.pack, Provenance::Rnd);
}

}  // namespace ntrl
