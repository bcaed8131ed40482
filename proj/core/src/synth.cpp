#include "gram/synth.hpp"

#include <random>
#include <string>

#include "gram/errors.hpp"

namespace gram {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * normal(rng);
  return m;
}

// Random projection with singular values bounded away from zero.
Eigen::MatrixXd full_rank_projection(int d, std::mt19937_64& rng) {
  for (;;) {
    Eigen::MatrixXd p = gaussian(d, d, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) > 0.05 * s(0)) return p;
  }
}

}  // namespace

double SyntheticSpec::sigma_for(int modality) const {
  return modality_noise.empty() ? noise_sigma : modality_noise[static_cast<std::size_t>(modality)];
}

void SyntheticSpec::validate() const {
  if (latent_dim < 1) throw InvalidSpec("latent_dim must be positive");
  if (embed_dim < 1) throw InvalidSpec("embed_dim must be positive");
  if (latent_dim > embed_dim) throw InvalidSpec("latent_dim must not exceed embed_dim");
  if (modalities < 2) throw InvalidSpec("at least two modalities are required");
  if (num_classes < 2) throw InvalidSpec("num_classes must be at least 2");
  if (!(noise_sigma >= 0.0)) throw InvalidSpec("noise_sigma must be nonnegative");
  if (!(class_spread >= 0.0)) throw InvalidSpec("class_spread must be nonnegative");
  if (samples < 1) throw InvalidSpec("samples must be positive");
  if (!modality_noise.empty()) {
    if (modality_noise.size() < static_cast<std::size_t>(modalities)) {
      throw InvalidSpec("modality_noise needs one entry per modality");
    }
    for (double s : modality_noise)
      if (!(s >= 0.0)) throw InvalidSpec("modality_noise entries must be nonnegative");
  }
}

MultimodalDataset MultimodalDataset::first_modalities(int count) const {
  if (count < 1 || count > modalities()) throw InvalidSpec("modality count out of range");
  MultimodalDataset out = *this;
  out.views.resize(static_cast<std::size_t>(count));
  return out;
}

MultimodalDataset generate_dataset(const SyntheticSpec& spec) {
  spec.validate();
  const int d = spec.latent_dim;
  const Eigen::Index n = spec.samples;

  MultimodalDataset out;
  auto shared = stream(spec.seed, 0);
  const Eigen::MatrixXd means = gaussian(spec.num_classes, d, spec.class_spread, shared);
  std::uniform_int_distribution<int> pick_class(0, spec.num_classes - 1);
  out.labels.resize(static_cast<std::size_t>(n));
  out.ids.resize(static_cast<std::size_t>(n));
  out.latents = gaussian(n, d, 1.0, shared);
  for (Eigen::Index s = 0; s < n; ++s) {
    const int c = pick_class(shared);
    out.labels[static_cast<std::size_t>(s)] = c;
    out.ids[static_cast<std::size_t>(s)] = s;
    out.latents.row(s) += means.row(c);
  }

  Eigen::MatrixXd first_projection;
  for (int m = 0; m < spec.modalities; ++m) {
    auto rng = stream(spec.seed, static_cast<std::uint64_t>(m) + 1);
    Eigen::MatrixXd projection = full_rank_projection(d, rng);
    if (m == 0) first_projection = projection;
    if (spec.shared_projection) projection = first_projection;
    const double sigma = spec.sigma_for(m);
    Eigen::MatrixXd view = out.latents * projection.transpose();
    if (sigma > 0.0) view += gaussian(n, d, sigma, rng);
    out.views.push_back(std::move(view));
  }
  return out;
}

}  // namespace gram
