#include "gram/optim.hpp"

#include <cmath>

#include "gram/errors.hpp"

namespace gram {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamHyper& hyper) {
  if (params.size() != grads.size()) throw DimensionMismatch("adam_step: params and grads differ in size");
  const auto size = static_cast<Eigen::Index>(params.size());
  if (state.m.size() == 0 && state.v.size() == 0) {
    state.m = Eigen::VectorXd::Zero(size);
    state.v = Eigen::VectorXd::Zero(size);
  }
  if (state.m.size() != size || state.v.size() != size) {
    throw DimensionMismatch("adam_step: optimizer state does not match parameter size");
  }

  ++state.step;
  const double correction1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (Eigen::Index i = 0; i < size; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double g = grads[idx];
    state.m(i) = hyper.beta1 * state.m(i) + (1.0 - hyper.beta1) * g;
    state.v(i) = hyper.beta2 * state.v(i) + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m(i) / correction1;
    const double v_hat = state.v(i) / correction2;
    params[idx] -= hyper.learning_rate *
                   (m_hat / (std::sqrt(v_hat) + hyper.epsilon) + hyper.weight_decay * params[idx]);
  }
}

}  // namespace gram
