#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ntrl/policy/sampler.hpp"
#include "ntrl/training/party_gen.hpp"

namespace ntrl {

struct GradcheckOptions {
  int nets = 5;
  int inputs = 5;
  double step = 1e-5;
  /// Denominator floor so parameters with (near) zero gradient compare absolutely.
  double floor = 1e-5;
  double tolerance = 1e-4;
};

struct GradcheckReport {
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t parameters_checked = 0;
  int nets = 0;
  int inputs = 0;
  bool passed = false;
};

inline ordered_json to_json(const GradcheckReport& r) {
  return ordered_json{{"max_relative_error", r.max_relative_error},
                      {"max_abs_error", r.max_abs_error},
                      {"parameters_checked", r.parameters_checked},
                      {"nets", r.nets},
                      {"inputs", r.inputs},
                      {"passed", r.passed}};
}

/// Small architecture over the pack's vocabulary, cheap enough to check every parameter.
inline ArchitectureConfig gradcheck_architecture(const ContentPack& pack) {
  auto a = ArchitectureConfig::from_pack(pack);
  a.hidden = 6;
  a.class_embedding = 4;
  a.group_embedding = 3;
  a.synergy_embedding = 4;
  return a;
}

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares the analytic gradient of a trace's summed log-probability with
/// central finite differences, in double precision, on random nets whose
/// output layer is non-zero.
inline GradcheckReport gradcheck(const ContentPack& pack, std::uint64_t seed, const GradcheckOptions& opt = {}) {
  GradcheckReport report;
  report.nets = opt.nets;
  report.inputs = opt.inputs;
  const RngStream root(seed);
  for (int n = 0; n < opt.nets; ++n) {
    auto net_rng = root.split(static_cast<std::uint64_t>(n));
    PolicyNetworkD net(gradcheck_architecture(pack), net_rng.next_u64());
    auto params = net.params();
    const auto& L = net.layout();
    // Zero biases put first-draw synergy activations exactly on the ReLU
    // kink, where finite differences are meaningless; randomise them.
    for (const auto* b : {&L.save_b, &L.res_b, &L.spell_b, &L.special_b, &L.num_b, &L.cat_b, &L.syn1_b, &L.syn2_b})
      for (std::size_t i = 0; i < b->size(); ++i) params[b->offset + i] = net_rng.uniform(-0.1, 0.1);
    for (std::size_t i = 0; i < L.out_w.size() + L.out_b.size(); ++i) params[L.out_w.offset + i] = net_rng.uniform(-0.5, 0.5);
    for (int k = 0; k < opt.inputs; ++k) {
      auto input_rng = net_rng.split(static_cast<std::uint64_t>(k));
      auto party = generate_party(pack, input_rng);
      party = apply_hp_variation(party, pack, HpVariationConfig{}, input_rng);
      const auto features = encode_party(party, pack, net.arch());
      const auto trace = sample_encounter(net, features, input_rng).second;
      std::vector<double> grad(net.param_count(), 0.0);
      log_prob_gradient<double>(net, features, trace, grad);
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + opt.step;
        const double up = trace_log_prob(net, features, trace);
        params[i] = saved - opt.step;
        const double down = trace_log_prob(net, features, trace);
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * opt.step);
        report.max_relative_error = std::max(report.max_relative_error, relative_error(grad[i], numeric, opt.floor));
        report.max_abs_error = std::max(report.max_abs_error, std::abs(grad[i] - numeric));
        ++report.parameters_checked;
      }
    }
  }
  report.passed = report.max_relative_error < opt.tolerance;
  return report;
}

}  // namespace ntrl
