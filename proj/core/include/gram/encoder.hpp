#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gram/nn.hpp"

namespace gram {

// Per-modality encoder: raw -> tanh(hidden) -> embedding, then row-wise
// normalization. Output rows are always unit-norm.
class ToyEncoder {
 public:
  ToyEncoder() = default;
  ToyEncoder(std::string name, Eigen::Index raw_dim, Eigen::Index hidden, Eigen::Index embed_dim,
             std::uint64_t seed);

  struct Cache {
    Eigen::MatrixXd input;
    Eigen::MatrixXd hidden;
    Eigen::VectorXd norms;
    Eigen::MatrixXd output;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& raw, Cache* cache = nullptr) const;
  // Accumulates parameter gradients from dL/d(normalized output).
  void backward(const Cache& cache, const Eigen::MatrixXd& d_output);

  const std::string& name() const { return name_; }
  Eigen::Index embed_dim() const { return embed_dim_; }
  std::size_t parameter_count() const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  std::string name_;
  Eigen::Index embed_dim_ = 0;
  Dense hidden_;
  Dense projection_;
};

}  // namespace gram
