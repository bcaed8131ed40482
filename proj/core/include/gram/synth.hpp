#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace gram {

// Parameters of the shared-latent multimodal generator.
//
// Every sample draws a class c and a latent z = mu_c + e with e ~ N(0, I_d).
// Modality i observes x_i = P_i z + sigma_i * e_i through a fixed random
// d x d projection P_i. Matched tuples share z.
struct SyntheticSpec {
  int latent_dim = 6;
  int embed_dim = 64;
  int modalities = 3;
  int num_classes = 8;
  double noise_sigma = 0.02;
  // Optional per-modality noise; when nonempty it overrides noise_sigma and
  // must have at least `modalities` entries.
  std::vector<double> modality_noise;
  // Scale of the class means relative to the per-sample spread.
  double class_spread = 1.0;
  // Use P_0 for every modality.
  bool shared_projection = false;
  int samples = 2048;
  std::uint64_t seed = 0;

  double sigma_for(int modality) const;
  // Throws InvalidSpec.
  void validate() const;
};

struct MultimodalDataset {
  std::vector<Eigen::MatrixXd> views;  // one N x d matrix per modality
  std::vector<int> labels;             // class per sample
  std::vector<std::int64_t> ids;       // sample id, equal to the row index
  Eigen::MatrixXd latents;             // N x d ground-truth z

  int modalities() const { return static_cast<int>(views.size()); }
  Eigen::Index samples() const { return static_cast<Eigen::Index>(labels.size()); }
  Eigen::Index raw_dim() const { return views.empty() ? 0 : views.front().cols(); }

  // Dataset restricted to the first `count` modalities.
  MultimodalDataset first_modalities(int count) const;
};

// Modality i is drawn from its own seeded stream, so the first m views are
// identical whatever the total modality count.
MultimodalDataset generate_dataset(const SyntheticSpec& spec);

}  // namespace gram
