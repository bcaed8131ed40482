#pragma once

#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gram {

// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool decay = true;  // subject to decoupled weight decay

  Parameter() = default;
  Parameter(std::string name, Eigen::MatrixXd init, bool decay = true)
      : name(std::move(name)), value(std::move(init)),
        grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())), decay(decay) {}

  void zero_grad() { grad.setZero(); }
};

// y = x W^T + b for a batch of row vectors.
class Dense {
 public:
  Dense() = default;
  Dense(std::string name, Eigen::Index in, Eigen::Index out, std::mt19937_64& rng);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  // Accumulates weight/bias gradients and returns dL/dx.
  Eigen::MatrixXd backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& dy);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter weight_;  // out x in
  Parameter bias_;    // 1 x out
};

// Backward of tanh given its output.
inline Eigen::MatrixXd tanh_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
  return dy.array() * (1.0 - y.array().square());
}

}  // namespace gram
