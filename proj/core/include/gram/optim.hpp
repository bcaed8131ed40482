#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Dense>

namespace gram {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;  // decoupled (AdamW)
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
};

// One AdamW update in place:
//   params -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * params)
// with bias-corrected first and second moments. State is sized on first use.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper);

}  // namespace gram
