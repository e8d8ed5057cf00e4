#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ntrl/policy/network.hpp"
#include "ntrl/sim/roster.hpp"

namespace ntrl {

/// Record of one sampling pass: actions in draw order (a trailing STOP
/// included) and the log-probability of each.
struct SampleTrace {
  std::vector<std::size_t> actions;
  std::vector<double> log_probs;
  bool stopped = false;
  /// Full action distribution at each draw, when requested.
  std::vector<std::vector<double>> probabilities;
};

inline ordered_json to_json(const SampleTrace& t) {
  ordered_json j;
  j["actions"] = t.actions;
  j["log_probs"] = t.log_probs;
  j["stopped"] = t.stopped;
  return j;
}

struct SampleOptions {
  /// Restricts the class actions; nullopt allows all. STOP is handled separately.
  std::optional<std::vector<bool>> allowed_classes;
  /// STOP is masked on the first draw so encounters are never empty.
  bool mask_first_stop = true;
  /// Draw limit; 0 uses the architecture's max_picks.
  std::size_t max_picks = 0;
  bool record_probabilities = false;
};

namespace detail {

inline std::vector<bool> action_mask(const ArchitectureConfig& arch, const SampleOptions& opt, std::size_t draw) {
  std::vector<bool> allowed(arch.actions(), true);
  if (opt.allowed_classes)
    for (std::size_t k = 0; k < arch.pool_size(); ++k) allowed[k] = (*opt.allowed_classes)[k];
  if (draw == 0 && opt.mask_first_stop) allowed[arch.stop_action()] = false;
  return allowed;
}

}  // namespace detail

/// Draws up to max_picks classes, updating the synergy counts after every pick
/// and ending early when STOP is drawn.
template <class T>
std::pair<Encounter, SampleTrace> sample_encounter(const PolicyNetwork<T>& net, const PartyFeatures& features,
                                                   RngStream& rng, const SampleOptions& opt = {}) {
  const auto& arch = net.arch();
  const std::size_t limit = opt.max_picks ? opt.max_picks : arch.max_picks;
  const auto ctx = net.encode(features);
  std::vector<double> synergy(arch.pool_size(), 0.0);
  StepCache<T> cache;
  Encounter encounter;
  SampleTrace trace;
  for (std::size_t draw = 0; draw < limit; ++draw) {
    const auto allowed = detail::action_mask(arch, opt, draw);
    net.step(ctx, synergy, allowed, cache);
    std::vector<double> p(arch.actions(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = allowed[i] ? std::exp(static_cast<double>(cache.logp[i])) : 0.0;
    const double u = rng.uniform();
    double cum = 0.0;
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!allowed[i]) continue;
      cum += p[i];
      if (u < cum) {
        pick = i;
        break;
      }
    }
    if (!pick)  // rounding left u above the final cumulative sum
      for (std::size_t i = p.size(); i-- > 0;)
        if (allowed[i] && p[i] > 0.0) {
          pick = i;
          break;
        }
    const auto a = *pick;
    trace.actions.push_back(a);
    trace.log_probs.push_back(static_cast<double>(cache.logp[a]));
    if (opt.record_probabilities) trace.probabilities.push_back(std::move(p));
    if (a == arch.stop_action()) {
      trace.stopped = true;
      break;
    }
    encounter.enemies.push_back(a);
    synergy[a] += 1.0;
  }
  return {std::move(encounter), std::move(trace)};
}

/// Gradient of sum_t log pi(a_t | s_t) for a recorded trace, accumulated into
/// `grad`. Replays every draw and throws TRACE_MISMATCH if a replayed
/// log-probability disagrees with the recorded one. Returns the summed log-prob.
template <class T>
double log_prob_gradient(const PolicyNetwork<T>& net, const PartyFeatures& features, const SampleTrace& trace,
                         std::span<T> grad, const SampleOptions& opt = {}) {
  const auto& arch = net.arch();
  if (grad.size() != net.param_count()) throw Error(ErrorCode::ShapeMismatch, "gradient buffer size mismatch", "grad");
  if (trace.actions.size() != trace.log_probs.size() || trace.actions.empty())
    throw Error(ErrorCode::TraceMismatch, "trace actions and log-probs differ in length", "trace");
  const auto ctx = net.encode(features);
  std::vector<double> synergy(arch.pool_size(), 0.0);
  std::vector<T> dpooled(ctx.pooled.size(), T(0));
  StepCache<T> cache;
  double total = 0.0;
  for (std::size_t t = 0; t < trace.actions.size(); ++t) {
    const auto a = trace.actions[t];
    if (a >= arch.actions()) throw Error(ErrorCode::TraceMismatch, "action out of range", "trace.actions");
    const auto allowed = detail::action_mask(arch, opt, t);
    net.step(ctx, synergy, allowed, cache);
    const double lp = static_cast<double>(cache.logp[a]);
    // Replays run the same arithmetic in the same order, so agreement is exact
    // unless the trace came from other parameters or inputs.
    if (!(std::abs(lp - trace.log_probs[t]) <= 1e-9 * std::max(1.0, std::abs(lp))))
      throw Error(ErrorCode::TraceMismatch,
                  "replayed log-prob " + std::to_string(lp) + " != recorded " + std::to_string(trace.log_probs[t]),
                  "trace.log_probs[" + std::to_string(t) + "]");
    total += lp;
    net.step_backward(cache, a, grad, dpooled);
    if (a == arch.stop_action()) break;
    synergy[a] += 1.0;
  }
  net.context_backward(features, ctx, dpooled, grad);
  return total;
}

/// Sum of log-probabilities of a trace under the current parameters, without
/// checking it against the recorded values.
template <class T>
double trace_log_prob(const PolicyNetwork<T>& net, const PartyFeatures& features, const SampleTrace& trace,
                      const SampleOptions& opt = {}) {
  const auto& arch = net.arch();
  const auto ctx = net.encode(features);
  std::vector<double> synergy(arch.pool_size(), 0.0);
  StepCache<T> cache;
  double total = 0.0;
  for (std::size_t t = 0; t < trace.actions.size(); ++t) {
    const auto a = trace.actions[t];
    net.step(ctx, synergy, detail::action_mask(arch, opt, t), cache);
    total += static_cast<double>(cache.logp[a]);
    if (a == arch.stop_action()) break;
    synergy[a] += 1.0;
  }
  return total;
}

}  // namespace ntrl
