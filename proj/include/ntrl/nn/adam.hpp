#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ntrl/content/content_pack.hpp"

namespace ntrl::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline ordered_json to_json(const AdamConfig& c) {
  return ordered_json{{"optimizer", "adam"}, {"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

inline AdamConfig adam_from_json(const json& j) {
  AdamConfig c;
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
  if (!(c.lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be > 0", "optimizer.lr");
  return c;
}

/// Adam with bias correction. `ascend` flips the sign so the same state can
/// maximize an objective.
template <class T>
class Adam {
 public:
  explicit Adam(std::size_t n = 0, AdamConfig cfg = {}) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  const AdamConfig& config() const noexcept { return cfg_; }
  long long steps() const noexcept { return t_; }

  void step(std::span<T> params, std::span<const T> grad, bool ascend) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    const double sign = ascend ? 1.0 : -1.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = static_cast<double>(grad[i]);
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
      const double update = cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
      params[i] = static_cast<T>(static_cast<double>(params[i]) + sign * update);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long long t_ = 0;
};

}  // namespace ntrl::nn
