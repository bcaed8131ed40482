#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gram/nn.hpp"

namespace gram {

// Binary matcher over the concatenation [anchor, data_2, ..., data_k] of one
// candidate tuple: two tanh hidden layers of width 4n and a single logit.
// The matching probability is sigmoid(logit).
class MatchingHead {
 public:
  MatchingHead() = default;
  MatchingHead(Eigen::Index k, Eigen::Index n, std::uint64_t seed);

  Eigen::Index input_dim() const { return input_dim_; }

  struct Cache {
    Eigen::MatrixXd input;
    Eigen::MatrixXd h1;
    Eigen::MatrixXd h2;
  };

  // Returns one logit per input row.
  Eigen::VectorXd forward(const Eigen::MatrixXd& input, Cache* cache = nullptr) const;

  // Accumulates parameter gradients from dL/dlogit and returns dL/dinput.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::VectorXd& dlogits);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  Eigen::Index input_dim_ = 0;
  Dense hidden1_;
  Dense hidden2_;
  Dense output_;
};

}  // namespace gram
