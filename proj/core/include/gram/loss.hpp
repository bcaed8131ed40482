#pragma once

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gram/matching_head.hpp"
#include "gram/similarity.hpp"

namespace gram {

// Weight of the data-anchor matching term in the total objective.
inline constexpr double kDamWeight = 0.1;

// Learnable softmax temperature, stored as log(tau) and clamped so that
// tau stays in [kMin, kMax].
class Temperature {
 public:
  static constexpr double kMin = 1e-3;
  static constexpr double kMax = 10.0;
  static constexpr double kInitial = 0.07;

  explicit Temperature(double tau = kInitial) { set_log_tau(std::log(tau)); }
  static Temperature from_log(double log_tau) {
    Temperature t;
    t.set_log_tau(log_tau);
    return t;
  }

  double tau() const { return std::exp(log_tau_); }
  double log_tau() const { return log_tau_; }
  void set_log_tau(double log_tau);

 private:
  double log_tau_ = 0.0;
};

struct ContrastiveLoss {
  double l_d2a = 0.0;
  double l_a2d = 0.0;
};

// Which axis of the cross-volume matrix holds the softmax candidates.
enum class SoftmaxAxis {
  kRows,     // data-to-anchor: query = data tuple i, candidates = anchors j
  kColumns,  // anchor-to-data: query = anchor i, candidates = data tuples j
};

// One direction of the volume contrastive loss and its derivatives.
struct DirectionalLoss {
  double loss = 0.0;
  Eigen::MatrixXd d_volumes;  // dL / d values(i, j)
  double d_log_tau = 0.0;
};

// -(1/B) sum_i log softmax(-V/tau)[i, i] along `axis`, with max-subtraction.
DirectionalLoss volume_softmax_loss(const Eigen::MatrixXd& volumes, Temperature tau,
                                    SoftmaxAxis axis);

ContrastiveLoss gram_contrastive_loss(const CrossVolumeMatrix& volumes, Temperature tau);

struct LossReport {
  double l_d2a = 0.0;
  double l_a2d = 0.0;
  double l_dam = 0.0;
  double l_tot = 0.0;
  Eigen::MatrixXd grad_anchor;              // B x n
  std::vector<Eigen::MatrixXd> grad_datas;  // (k-1) x [B x n]
  double grad_log_tau = 0.0;
  std::size_t degenerate_entries = 0;
};

// Contrastive part of the objective: losses and gradients with respect to
// every embedding row (through every cross-volume entry) and log(tau).
// l_dam is zero and l_tot = (l_d2a + l_a2d) / 2.
LossReport contrastive_grad(const MultimodalBatch& batch, Temperature tau);

// A binary matching prediction. `p` is a sigmoid output, so 0 < p < 1.
struct MatchLabel {
  int y = 0;
  double p = 0.5;
};

// Mean binary cross-entropy -(1/N) sum [y log p + (1 - y) log(1 - p)].
double dam_loss(std::span<const MatchLabel> preds);

// Same loss taking logits, evaluated as softplus to avoid log(0).
// `d_logits`, when non-null, receives dL/dlogit per entry.
double dam_loss_from_logits(const Eigen::VectorXd& logits, std::span<const int> labels,
                            Eigen::VectorXd* d_logits = nullptr);

struct HardNegative {
  Eigen::Index query = 0;
  Eigen::Index negative = 0;
  bool operator==(const HardNegative&) const = default;
};

// For every data tuple i, the anchor j != i with the smallest volume
// values(i, j); ties go to the lowest j. Throws BatchTooSmall for B < 2.
std::vector<HardNegative> hard_negative_mine(const CrossVolumeMatrix& volumes);

double total_loss(const ContrastiveLoss& contrastive, double dam, double lambda = kDamWeight);

// Full objective: contrastive terms plus the matching loss on B positives
// and B mined negatives (anchor swapped for its hardest negative).
// Head parameter gradients are accumulated into `head`.
LossReport gram_objective(const MultimodalBatch& batch, Temperature tau, MatchingHead& head,
                          double lambda = kDamWeight);

// Same objective with the hard negatives supplied instead of mined. The
// mined assignment is piecewise constant in the embeddings, so holding it
// fixed gives the smooth branch the analytic gradient belongs to.
LossReport gram_objective(const MultimodalBatch& batch, Temperature tau, MatchingHead& head, double lambda,
                          std::span<const HardNegative> negatives);

// Pairwise cosine baseline: the symmetric CLIP loss between the anchor and
// each data modality, averaged over the data modalities. l_d2a holds the
// mean data-to-anchor term and l_a2d the anchor-to-data term.
LossReport pairwise_cosine_objective(const MultimodalBatch& batch, Temperature tau);

}  // namespace gram
