#include "gram/matching_head.hpp"

#include <random>

namespace gram {

MatchingHead::MatchingHead(Eigen::Index k, Eigen::Index n, std::uint64_t seed) : input_dim_(k * n) {
  std::mt19937_64 rng(seed);
  const Eigen::Index width = 4 * n;
  hidden1_ = Dense("dam.hidden1", input_dim_, width, rng);
  hidden2_ = Dense("dam.hidden2", width, width, rng);
  output_ = Dense("dam.output", width, 1, rng);
}

Eigen::VectorXd MatchingHead::forward(const Eigen::MatrixXd& input, Cache* cache) const {
  Eigen::MatrixXd h1 = hidden1_.forward(input).array().tanh().matrix();
  Eigen::MatrixXd h2 = hidden2_.forward(h1).array().tanh().matrix();
  Eigen::VectorXd logits = output_.forward(h2).col(0);
  if (cache != nullptr) {
    cache->input = input;
    cache->h1 = std::move(h1);
    cache->h2 = std::move(h2);
  }
  return logits;
}

Eigen::MatrixXd MatchingHead::backward(const Cache& cache, const Eigen::VectorXd& dlogits) {
  Eigen::MatrixXd dh2 = output_.backward(cache.h2, dlogits);
  Eigen::MatrixXd dh1 = hidden2_.backward(cache.h1, tanh_backward(cache.h2, dh2));
  return hidden1_.backward(cache.input, tanh_backward(cache.h1, dh1));
}

std::vector<Parameter*> MatchingHead::parameters() {
  return {&hidden1_.weight(), &hidden1_.bias(), &hidden2_.weight(),
          &hidden2_.bias(),   &output_.weight(),  &output_.bias()};
}

std::vector<const Parameter*> MatchingHead::parameters() const {
  return {&hidden1_.weight(), &hidden1_.bias(), &hidden2_.weight(),
          &hidden2_.bias(),   &output_.weight(),  &output_.bias()};
}

}  // namespace gram
