#include "gram/encoder.hpp"

#include <random>

#include "gram/errors.hpp"

namespace gram {

ToyEncoder::ToyEncoder(std::string name, Eigen::Index raw_dim, Eigen::Index hidden,
                       Eigen::Index embed_dim, std::uint64_t seed)
    : name_(std::move(name)), embed_dim_(embed_dim) {
  std::mt19937_64 rng(seed);
  hidden_ = Dense(name_ + ".hidden", raw_dim, hidden, rng);
  projection_ = Dense(name_ + ".projection", hidden, embed_dim, rng);
}

Eigen::MatrixXd ToyEncoder::forward(const Eigen::MatrixXd& raw, Cache* cache) const {
  Eigen::MatrixXd h = hidden_.forward(raw).array().tanh().matrix();
  Eigen::MatrixXd y = projection_.forward(h);
  if (!y.allFinite()) throw NonFiniteInput("encoder '" + name_ + "' produced a non-finite embedding");
  Eigen::VectorXd norms = y.rowwise().stableNorm();
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    if (!(norms(i) >= 1e-30)) throw ZeroVector("encoder '" + name_ + "' produced a zero embedding");
    y.row(i) /= norms(i);
  }
  if (cache != nullptr) {
    cache->input = raw;
    cache->hidden = std::move(h);
    cache->norms = std::move(norms);
    cache->output = y;
  }
  return y;
}

void ToyEncoder::backward(const Cache& cache, const Eigen::MatrixXd& d_output) {
  // d/dx (x / |x|) applied to dy: (dy - u <u, dy>) / |x|
  Eigen::MatrixXd d_pre(d_output.rows(), d_output.cols());
  for (Eigen::Index i = 0; i < d_output.rows(); ++i) {
    const auto u = cache.output.row(i);
    d_pre.row(i) = (d_output.row(i) - u * u.dot(d_output.row(i))) / cache.norms(i);
  }
  const Eigen::MatrixXd d_hidden = projection_.backward(cache.hidden, d_pre);
  hidden_.backward(cache.input, tanh_backward(cache.hidden, d_hidden));
}

std::size_t ToyEncoder::parameter_count() const {
  std::size_t count = 0;
  for (const auto* p : parameters()) count += static_cast<std::size_t>(p->value.size());
  return count;
}

std::vector<Parameter*> ToyEncoder::parameters() {
  return {&hidden_.weight(), &hidden_.bias(), &projection_.weight(), &projection_.bias()};
}

std::vector<const Parameter*> ToyEncoder::parameters() const {
  return {&hidden_.weight(), &hidden_.bias(), &projection_.weight(), &projection_.bias()};
}

}  // namespace gram
