#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ntrl/nn/dense.hpp"
#include "ntrl/policy/features.hpp"
#include "ntrl/sim/rng.hpp"

namespace ntrl {

/// A contiguous [rows x cols] slice of the flat parameter vector.
struct ParamBlock {
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const noexcept { return rows * cols; }
};

/// Offsets of every tensor inside the flat parameter vector, in storage order.
struct ParamLayout {
  ParamBlock class_emb;
  ParamBlock save_w, save_b;
  ParamBlock res_w, res_b;
  ParamBlock spell_w, spell_b;
  ParamBlock special_w, special_b;
  ParamBlock num_w, num_b;
  ParamBlock cat_w, cat_b;
  ParamBlock syn1_w, syn1_b;
  ParamBlock syn2_w, syn2_b;
  ParamBlock out_w, out_b;
  std::size_t total = 0;

  explicit ParamLayout(const ArchitectureConfig& a) {
    const auto take = [this](std::size_t rows, std::size_t cols) {
      ParamBlock b{total, rows, cols};
      total += b.size();
      return b;
    };
    const auto g = a.group_embedding, h = a.hidden, z = a.synergy_embedding;
    class_emb = take(a.classes.size(), a.class_embedding);
    save_w = take(kSaveVocab, g);
    save_b = take(1, g);
    res_w = take(kResistanceVocab, g);
    res_b = take(1, g);
    spell_w = take(a.spells.size(), g);
    spell_b = take(1, g);
    special_w = take(kSpecialVocab, g);
    special_b = take(1, g);
    num_w = take(kNumericFeatures, h);
    num_b = take(1, h);
    cat_w = take(a.categorical_width(), h);
    cat_b = take(1, h);
    syn1_w = take(a.pool_size(), z);
    syn1_b = take(1, z);
    syn2_w = take(z, h);
    syn2_b = take(1, h);
    out_w = take(a.head_width(), a.actions());
    out_b = take(1, a.actions());
  }
};

/// Party-level activations shared by every draw of one sampling pass.
template <class T>
struct PartyContext {
  std::size_t members = 0;
  std::vector<T> numeric;    // members x kNumericFeatures
  std::vector<T> cat_in;     // members x categorical_width
  std::vector<T> h_num;      // members x hidden
  std::vector<T> h_cat;      // members x hidden
  std::vector<T> pooled;     // 2 * hidden + 1
};

/// Activations of one draw given the synergy vector.
template <class T>
struct StepCache {
  std::vector<T> synergy;  // pool_size, scaled
  std::vector<T> z;        // synergy_embedding
  std::vector<T> hs;       // hidden
  std::vector<T> head;     // head_width
  std::vector<T> logits;   // actions
  std::vector<T> logp;     // actions
  std::vector<bool> allowed;
};

/// Encounter policy: per-member numeric and categorical encoders (128 units,
/// ReLU) mean-pooled over present members, a synergy branch, and a linear
/// softmax head over the pool classes plus STOP.
///
/// T = float for training, T = double for finite-difference checks.
template <class T>
class PolicyNetwork {
 public:
  explicit PolicyNetwork(ArchitectureConfig arch, std::uint64_t init_seed = 0)
      : arch_(std::move(arch)), layout_(arch_), params_(layout_.total, T(0)) {
    initialize(init_seed);
  }

  PolicyNetwork(ArchitectureConfig arch, std::vector<T> params)
      : arch_(std::move(arch)), layout_(arch_), params_(std::move(params)) {
    if (params_.size() != layout_.total)
      throw Error(ErrorCode::ShapeMismatch,
                  "parameter count " + std::to_string(params_.size()) + " != " + std::to_string(layout_.total));
  }

  const ArchitectureConfig& arch() const noexcept { return arch_; }
  const ParamLayout& layout() const noexcept { return layout_; }
  std::span<T> params() noexcept { return params_; }
  std::span<const T> params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  /// Uniform fan-in initialisation, zero biases, zero output layer (so the
  /// initial policy is uniform).
  void initialize(std::uint64_t seed) {
    std::fill(params_.begin(), params_.end(), T(0));
    RngStream rng(seed);
    const auto fill = [&](const ParamBlock& b, double fan_in) {
      const double bound = 1.0 / std::sqrt(std::max(1.0, fan_in));
      for (std::size_t i = 0; i < b.size(); ++i) params_[b.offset + i] = static_cast<T>(rng.uniform(-bound, bound));
    };
    const auto& L = layout_;
    fill(L.class_emb, 1.0);
    fill(L.save_w, static_cast<double>(L.save_w.rows));
    fill(L.res_w, static_cast<double>(L.res_w.rows));
    fill(L.spell_w, static_cast<double>(L.spell_w.rows));
    fill(L.special_w, static_cast<double>(L.special_w.rows));
    fill(L.num_w, static_cast<double>(L.num_w.rows));
    fill(L.cat_w, static_cast<double>(L.cat_w.rows));
    fill(L.syn1_w, static_cast<double>(L.syn1_w.rows));
    fill(L.syn2_w, static_cast<double>(L.syn2_w.rows));
  }

  std::span<const T> block(const ParamBlock& b) const { return {params_.data() + b.offset, b.size()}; }
  std::span<T> block(const ParamBlock& b) { return {params_.data() + b.offset, b.size()}; }

  void check_features(const PartyFeatures& f) const {
    const auto rows = arch_.max_members;
    if (f.numeric.size() != rows * kNumericFeatures || f.class_ids.size() != rows ||
        f.saves.size() != rows * kSaveVocab || f.resistances.size() != rows * kResistanceVocab ||
        f.spells.size() != rows * arch_.spells.size() || f.specials.size() != rows * kSpecialVocab ||
        f.mask.size() != rows || f.members < 1 || f.members > rows)
      throw Error(ErrorCode::ShapeMismatch, "party features do not match the architecture", "features");
    for (std::size_t r = 0; r < f.members; ++r)
      if (f.class_ids[r] < 0 || static_cast<std::size_t>(f.class_ids[r]) >= arch_.classes.size())
        throw Error(ErrorCode::ShapeMismatch, "class id out of range", "features.class_ids");
  }

  PartyContext<T> encode(const PartyFeatures& f) const {
    check_features(f);
    const auto& L = layout_;
    const std::size_t n = f.members, h = arch_.hidden, g = arch_.group_embedding, cw = arch_.categorical_width();
    PartyContext<T> ctx;
    ctx.members = n;
    ctx.numeric.resize(n * kNumericFeatures);
    ctx.cat_in.assign(n * cw, T(0));
    ctx.h_num.resize(n * h);
    ctx.h_cat.resize(n * h);
    ctx.pooled.assign(2 * h + 1, T(0));
    std::vector<T> buf;
    for (std::size_t r = 0; r < n; ++r) {
      std::span<T> num(ctx.numeric.data() + r * kNumericFeatures, kNumericFeatures);
      for (std::size_t k = 0; k < kNumericFeatures; ++k) num[k] = static_cast<T>(f.numeric[r * kNumericFeatures + k]);
      std::span<T> hn(ctx.h_num.data() + r * h, h);
      nn::dense_forward<T>(block(L.num_w), block(L.num_b), num, hn);
      nn::relu_inplace(hn);

      std::span<T> cat(ctx.cat_in.data() + r * cw, cw);
      const auto emb = block(L.class_emb).subspan(static_cast<std::size_t>(f.class_ids[r]) * arch_.class_embedding,
                                                  arch_.class_embedding);
      std::copy(emb.begin(), emb.end(), cat.begin());
      std::size_t at = arch_.class_embedding;
      const auto group = [&](const std::vector<double>& hot, std::size_t width, const ParamBlock& w, const ParamBlock& b) {
        buf.resize(width);
        for (std::size_t k = 0; k < width; ++k) buf[k] = static_cast<T>(hot[r * width + k]);
        nn::dense_forward<T>(block(w), block(b), buf, cat.subspan(at, g));
        at += g;
      };
      group(f.saves, kSaveVocab, L.save_w, L.save_b);
      group(f.resistances, kResistanceVocab, L.res_w, L.res_b);
      group(f.spells, arch_.spells.size(), L.spell_w, L.spell_b);
      group(f.specials, kSpecialVocab, L.special_w, L.special_b);

      std::span<T> hc(ctx.h_cat.data() + r * h, h);
      nn::dense_forward<T>(block(L.cat_w), block(L.cat_b), std::span<const T>(cat), hc);
      nn::relu_inplace(hc);
      for (std::size_t j = 0; j < h; ++j) {
        ctx.pooled[j] += hn[j];
        ctx.pooled[h + j] += hc[j];
      }
    }
    for (std::size_t j = 0; j < 2 * h; ++j) ctx.pooled[j] /= static_cast<T>(n);
    ctx.pooled[2 * h] = static_cast<T>(static_cast<double>(n) / arch_.scales.party_size);
    return ctx;
  }

  /// One draw: log-probabilities over actions given raw synergy counts.
  void step(const PartyContext<T>& ctx, std::span<const double> synergy_counts, const std::vector<bool>& allowed,
            StepCache<T>& c) const {
    if (synergy_counts.size() != arch_.pool_size())
      throw Error(ErrorCode::ShapeMismatch, "synergy vector length != pool size", "synergy");
    if (allowed.size() != arch_.actions())
      throw Error(ErrorCode::ShapeMismatch, "action mask length != action count", "allowed");
    const auto& L = layout_;
    const std::size_t h = arch_.hidden;
    c.synergy.resize(arch_.pool_size());
    for (std::size_t k = 0; k < c.synergy.size(); ++k)
      c.synergy[k] = static_cast<T>(synergy_counts[k] / arch_.scales.synergy);
    c.z.resize(arch_.synergy_embedding);
    nn::dense_forward<T>(block(L.syn1_w), block(L.syn1_b), c.synergy, c.z);
    c.hs.resize(h);
    nn::dense_forward<T>(block(L.syn2_w), block(L.syn2_b), c.z, c.hs);
    nn::relu_inplace<T>(c.hs);
    c.head.resize(arch_.head_width());
    std::copy(ctx.pooled.begin(), ctx.pooled.end(), c.head.begin());
    std::copy(c.hs.begin(), c.hs.end(), c.head.begin() + static_cast<std::ptrdiff_t>(ctx.pooled.size()));
    c.logits.resize(arch_.actions());
    nn::dense_forward<T>(block(L.out_w), block(L.out_b), c.head, c.logits);
    c.allowed = allowed;
    c.logp.resize(arch_.actions());
    nn::log_softmax<T>(c.logits, c.allowed, c.logp);
  }

  /// Probabilities over the actions (pool classes, then STOP).
  std::vector<double> forward(const PartyFeatures& f, std::span<const double> synergy_counts,
                              bool stop_allowed = true) const {
    std::vector<bool> allowed(arch_.actions(), true);
    allowed[arch_.stop_action()] = stop_allowed;
    return forward(f, synergy_counts, allowed);
  }

  std::vector<double> forward(const PartyFeatures& f, std::span<const double> synergy_counts,
                              const std::vector<bool>& allowed) const {
    const auto ctx = encode(f);
    StepCache<T> c;
    step(ctx, synergy_counts, allowed, c);
    std::vector<double> p(c.logp.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = allowed[i] ? std::exp(static_cast<double>(c.logp[i])) : 0.0;
    return p;
  }

  /// Backpropagates d(sum of chosen log-probs)/d(logits) of one draw into
  /// `grad`; accumulates the gradient w.r.t. the pooled context into `dpooled`.
  void step_backward(const StepCache<T>& c, std::size_t action, std::span<T> grad, std::span<T> dpooled) const {
    const auto& L = layout_;
    const std::size_t h = arch_.hidden;
    std::vector<T> dlogits(arch_.actions());
    for (std::size_t i = 0; i < dlogits.size(); ++i)
      dlogits[i] = c.allowed[i] ? -static_cast<T>(std::exp(c.logp[i])) : T(0);
    dlogits[action] += T(1);
    std::vector<T> dhead(arch_.head_width());
    nn::dense_backward<T>(block(L.out_w), c.head, dlogits, sub(grad, L.out_w), sub(grad, L.out_b), dhead);
    for (std::size_t j = 0; j < dpooled.size(); ++j) dpooled[j] += dhead[j];
    std::span<T> dhs(dhead.data() + dpooled.size(), h);
    nn::relu_backward<T>(c.hs, dhs);
    std::vector<T> dz(arch_.synergy_embedding);
    nn::dense_backward<T>(block(L.syn2_w), c.z, dhs, sub(grad, L.syn2_w), sub(grad, L.syn2_b), dz);
    nn::dense_backward<T>(block(L.syn1_w), c.synergy, dz, sub(grad, L.syn1_w), sub(grad, L.syn1_b), std::span<T>{});
  }

  /// Backpropagates the accumulated pooled-context gradient through the
  /// per-member encoders.
  void context_backward(const PartyFeatures& f, const PartyContext<T>& ctx, std::span<const T> dpooled,
                        std::span<T> grad) const {
    const auto& L = layout_;
    const std::size_t n = ctx.members, h = arch_.hidden, g = arch_.group_embedding, cw = arch_.categorical_width();
    const T inv_n = T(1) / static_cast<T>(n);
    std::vector<T> dh(h), dcat(cw), buf;
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < h; ++j) dh[j] = dpooled[j] * inv_n;
      nn::relu_backward<T>(std::span<const T>(ctx.h_num.data() + r * h, h), dh);
      nn::dense_backward<T>(block(L.num_w), std::span<const T>(ctx.numeric.data() + r * kNumericFeatures, kNumericFeatures),
                            dh, sub(grad, L.num_w), sub(grad, L.num_b), std::span<T>{});

      for (std::size_t j = 0; j < h; ++j) dh[j] = dpooled[h + j] * inv_n;
      nn::relu_backward<T>(std::span<const T>(ctx.h_cat.data() + r * h, h), dh);
      nn::dense_backward<T>(block(L.cat_w), std::span<const T>(ctx.cat_in.data() + r * cw, cw), dh, sub(grad, L.cat_w),
                            sub(grad, L.cat_b), std::span<T>(dcat));

      auto demb = sub(grad, L.class_emb).subspan(static_cast<std::size_t>(f.class_ids[r]) * arch_.class_embedding,
                                                 arch_.class_embedding);
      for (std::size_t k = 0; k < arch_.class_embedding; ++k) demb[k] += dcat[k];
      std::size_t at = arch_.class_embedding;
      const auto group = [&](const std::vector<double>& hot, std::size_t width, const ParamBlock& w, const ParamBlock& b) {
        buf.resize(width);
        for (std::size_t k = 0; k < width; ++k) buf[k] = static_cast<T>(hot[r * width + k]);
        nn::dense_backward<T>(block(w), buf, std::span<const T>(dcat.data() + at, g), sub(grad, w), sub(grad, b),
                              std::span<T>{});
        at += g;
      };
      group(f.saves, kSaveVocab, L.save_w, L.save_b);
      group(f.resistances, kResistanceVocab, L.res_w, L.res_b);
      group(f.spells, arch_.spells.size(), L.spell_w, L.spell_b);
      group(f.specials, kSpecialVocab, L.special_w, L.special_b);
    }
  }

 private:
  static std::span<T> sub(std::span<T> all, const ParamBlock& b) { return all.subspan(b.offset, b.size()); }

  ArchitectureConfig arch_;
  ParamLayout layout_;
  std::vector<T> params_;
};

using PolicyNetworkF = PolicyNetwork<float>;
using PolicyNetworkD = PolicyNetwork<double>;

}  // namespace ntrl
