#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "springsim/types.hpp"

namespace springsim {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First-order adaptive-moment descent with a per-coordinate learning rate.
class Adam {
 public:
  Adam(std::size_t dimension, AdamConfig config = {})
      : config_(config), m_(dimension, 0.0), v_(dimension, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad,
            std::span<const double> learning_rates) {
    if (params.size() != m_.size() || grad.size() != m_.size() ||
        learning_rates.size() != m_.size())
      throw Error("Adam: dimension mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < m_.size(); ++i) {
      m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
      v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      params[i] -= learning_rates[i] * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }

  std::size_t iterations() const { return t_; }

 private:
  AdamConfig config_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace springsim
