#pragma once

#include <cmath>
#include <deque>
#include <numeric>
#include <span>
#include <vector>

#include "ntrl/nn/adam.hpp"
#include "ntrl/policy/sampler.hpp"

namespace ntrl {

/// Mean of the most recent `window` rewards; 0 before any reward is seen.
class RunningBaseline {
 public:
  explicit RunningBaseline(std::size_t window = 100) : window_(window) {}

  double value() const noexcept {
    return history_.empty() ? 0.0 : sum_ / static_cast<double>(history_.size());
  }
  void push(double reward) {
    history_.push_back(reward);
    sum_ += reward;
    if (history_.size() > window_) {
      sum_ -= history_.front();
      history_.pop_front();
    }
  }
  std::size_t size() const noexcept { return history_.size(); }

 private:
  std::size_t window_;
  std::deque<double> history_;
  double sum_ = 0.0;
};

struct ReinforceConfig {
  nn::AdamConfig optimizer{};
  bool use_baseline = true;
  std::size_t baseline_window = 100;
  double reward_scale = 1000.0;
};

/// One sampled encounter with its context and observed reward.
struct ReinforceRecord {
  PartyFeatures features;
  SampleTrace trace;
  double reward = 0.0;
};

struct ReinforceStepResult {
  /// Surrogate loss -mean((R - b)/scale * log pi); its gradient is the negated ascent direction.
  double loss = 0.0;
  double baseline = 0.0;
  double grad_norm = 0.0;
  bool applied = false;
};

/// Policy-gradient ascent along mean_i grad log pi(trace_i) * (R_i - b) / scale.
/// b is the running mean of earlier rewards (0 when disabled). A batch with
/// zero advantage carries no signal and leaves the parameters untouched.
/// Throws NON_FINITE_GRADIENT without updating when the gradient overflows.
template <class T>
ReinforceStepResult reinforce_step(PolicyNetwork<T>& net, std::span<const ReinforceRecord> batch, nn::Adam<T>& optimizer,
                                   RunningBaseline& baseline, const ReinforceConfig& cfg,
                                   const SampleOptions& sample_options = {}) {
  ReinforceStepResult result;
  if (batch.empty()) return result;
  result.baseline = cfg.use_baseline ? baseline.value() : 0.0;
  std::vector<T> grad(net.param_count(), T(0));
  std::vector<T> scratch(net.param_count());
  bool any_signal = false;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& rec : batch) {
    const double advantage = (rec.reward - result.baseline) / cfg.reward_scale;
    std::fill(scratch.begin(), scratch.end(), T(0));
    const double logp = log_prob_gradient<T>(net, rec.features, rec.trace, scratch, sample_options);
    result.loss -= advantage * logp * inv_n;
    if (advantage == 0.0) continue;
    any_signal = true;
    const T w = static_cast<T>(advantage * inv_n);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * scratch[i];
  }
  double sq = 0.0;
  for (T g : grad) sq += static_cast<double>(g) * static_cast<double>(g);
  result.grad_norm = std::sqrt(sq);
  if (!std::isfinite(result.grad_norm) || !std::isfinite(result.loss))
    throw Error(ErrorCode::NonFiniteGradient, "policy gradient is not finite");
  if (any_signal) {
    optimizer.step(net.params(), grad, /*ascend=*/true);
    result.applied = true;
  }
  if (cfg.use_baseline)
    for (const auto& rec : batch) baseline.push(rec.reward);
  return result;
}

}  // namespace ntrl
