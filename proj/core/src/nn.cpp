#include "gram/nn.hpp"

#include <cmath>

namespace gram {

Dense::Dense(std::string name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng) {
  // Glorot-uniform weights, zero bias.
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Eigen::MatrixXd w(out, in);
  for (Eigen::Index r = 0; r < out; ++r)
    for (Eigen::Index c = 0; c < in; ++c) w(r, c) = dist(rng);
  weight_ = Parameter(name + ".weight", std::move(w));
  bias_ = Parameter(name + ".bias", Eigen::MatrixXd::Zero(1, out), /*decay=*/false);
}

Eigen::MatrixXd Dense::forward(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd y = x * weight_.value.transpose();
  y.rowwise() += bias_.value.row(0);
  return y;
}

Eigen::MatrixXd Dense::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy) {
  weight_.grad.noalias() += dy.transpose() * x;
  bias_.grad.row(0) += dy.colwise().sum();
  return dy * weight_.value;
}

}  // namespace gram
