#include "gram/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "gram/errors.hpp"

namespace gram {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_square(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw NonSquare("volume matrix must be square and nonempty");
}

// Rows of the concatenated [anchor_{anchor_row}, data_{2,i}, ..., data_{k,i}]
// head input.
Eigen::MatrixXd matching_inputs(const MultimodalBatch& batch,
                                const std::vector<Eigen::Index>& anchor_rows) {
  const Eigen::Index b = batch.size();
  const Eigen::Index n = batch.dim();
  const auto k = static_cast<Eigen::Index>(batch.k());
  Eigen::MatrixXd x(b, k * n);
  for (Eigen::Index i = 0; i < b; ++i) {
    x.row(i).segment(0, n) = batch.anchor().rows().row(anchor_rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index m = 1; m < k; ++m)
      x.row(i).segment(m * n, n) = batch.datas()[static_cast<std::size_t>(m - 1)].rows().row(i);
  }
  return x;
}

}  // namespace

void Temperature::set_log_tau(double log_tau) {
  if (std::isnan(log_tau)) throw NonFiniteInput("log temperature is NaN");
  log_tau_ = std::clamp(log_tau, std::log(kMin), std::log(kMax));
}

DirectionalLoss volume_softmax_loss(const Eigen::MatrixXd& volumes, Temperature tau, SoftmaxAxis axis) {
  check_square(volumes);
  if (volumes.hasNaN()) throw NonFiniteLoss("volume matrix contains NaN");
  // Work on rows: transpose for the column direction.
  const Eigen::MatrixXd v = axis == SoftmaxAxis::kRows ? volumes : Eigen::MatrixXd(volumes.transpose());
  const Eigen::Index b = v.rows();
  const double t = tau.tau();
  const double inv_b = 1.0 / static_cast<double>(b);

  DirectionalLoss out;
  Eigen::MatrixXd d_logits(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::RowVectorXd logits = -v.row(i) / t;
    const double max_logit = logits.maxCoeff();
    const Eigen::RowVectorXd shifted = (logits.array() - max_logit).exp().matrix();
    const double sum = shifted.sum();
    out.loss += (std::log(sum) + max_logit - logits(i)) * inv_b;
    d_logits.row(i) = shifted / sum * inv_b;
    d_logits(i, i) -= inv_b;
  }
  // logits = -V / tau, so dlogit/dV = -1/tau and dlogit/dlog(tau) = V / tau.
  Eigen::MatrixXd d_v = -d_logits / t;
  out.d_log_tau = (d_logits.array() * v.array()).sum() / t;
  out.d_volumes = axis == SoftmaxAxis::kRows ? d_v : Eigen::MatrixXd(d_v.transpose());
  if (!std::isfinite(out.loss)) throw NonFiniteLoss("contrastive loss is not finite");
  return out;
}

ContrastiveLoss gram_contrastive_loss(const CrossVolumeMatrix& volumes, Temperature tau) {
  return {volume_softmax_loss(volumes.values, tau, SoftmaxAxis::kRows).loss,
          volume_softmax_loss(volumes.values, tau, SoftmaxAxis::kColumns).loss};
}

LossReport contrastive_grad(const MultimodalBatch& batch, Temperature tau) {
  const auto volumes = cross_volume_matrix(batch);
  const auto d2a = volume_softmax_loss(volumes.values, tau, SoftmaxAxis::kRows);
  const auto a2d = volume_softmax_loss(volumes.values, tau, SoftmaxAxis::kColumns);

  // The reported contrastive objective is the mean of both directions.
  const Eigen::MatrixXd upstream = 0.5 * (d2a.d_volumes + a2d.d_volumes);
  auto grads = backprop_cross_volume(batch, upstream);

  LossReport report;
  report.l_d2a = d2a.loss;
  report.l_a2d = a2d.loss;
  report.l_tot = total_loss({d2a.loss, a2d.loss}, 0.0);
  report.grad_anchor = std::move(grads.anchor);
  report.grad_datas = std::move(grads.datas);
  report.grad_log_tau = 0.5 * (d2a.d_log_tau + a2d.d_log_tau);
  report.degenerate_entries = grads.degenerate_entries;
  return report;
}

double dam_loss(std::span<const MatchLabel> preds) {
  if (preds.empty()) throw EmptyInput("dam_loss needs at least one prediction");
  double sum = 0.0;
  for (const auto& pred : preds) {
    if (pred.y != 0 && pred.y != 1) throw Error("MatchLabel y must be 0 or 1");
    if (!(pred.p > 0.0 && pred.p < 1.0)) throw Error("MatchLabel p must lie strictly in (0, 1)");
    sum += pred.y == 1 ? std::log(pred.p) : std::log1p(-pred.p);
  }
  return -sum / static_cast<double>(preds.size());
}

double dam_loss_from_logits(const Eigen::VectorXd& logits, std::span<const int> labels,
                            Eigen::VectorXd* d_logits) {
  if (logits.size() == 0) throw EmptyInput("dam_loss needs at least one prediction");
  if (static_cast<std::size_t>(logits.size()) != labels.size()) {
    throw DimensionMismatch("one label per logit is required");
  }
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double sum = 0.0;
  if (d_logits != nullptr) d_logits->resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) throw Error("MatchLabel y must be 0 or 1");
    const double z = logits(i);
    // -log sigmoid(z) = softplus(-z), -log(1 - sigmoid(z)) = softplus(z)
    sum += y == 1 ? softplus(-z) : softplus(z);
    if (d_logits != nullptr) (*d_logits)(i) = (sigmoid(z) - y) * inv_n;
  }
  return sum * inv_n;
}

std::vector<HardNegative> hard_negative_mine(const CrossVolumeMatrix& volumes) {
  check_square(volumes.values);
  const Eigen::Index b = volumes.size();
  if (b < 2) throw BatchTooSmall("hard negative mining needs at least two samples");
  std::vector<HardNegative> out;
  out.reserve(static_cast<std::size_t>(b));
  for (Eigen::Index i = 0; i < b; ++i) {
    Eigen::Index best = -1;
    double best_volume = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < b; ++j) {
      if (j == i) continue;
      if (best < 0 || volumes(i, j) < best_volume) {
        best = j;
        best_volume = volumes(i, j);
      }
    }
    out.push_back({i, best});
  }
  return out;
}

double total_loss(const ContrastiveLoss& contrastive, double dam, double lambda) {
  return 0.5 * (contrastive.l_d2a + contrastive.l_a2d) + lambda * dam;
}

LossReport gram_objective(const MultimodalBatch& batch, Temperature tau, MatchingHead& head,
                          double lambda) {
  return gram_objective(batch, tau, head, lambda, {});
}

LossReport gram_objective(const MultimodalBatch& batch, Temperature tau, MatchingHead& head, double lambda,
                          std::span<const HardNegative> negatives) {
  const Eigen::Index b = batch.size();
  const Eigen::Index n = batch.dim();
  const auto volumes = cross_volume_matrix(batch);
  const auto d2a = volume_softmax_loss(volumes.values, tau, SoftmaxAxis::kRows);
  const auto a2d = volume_softmax_loss(volumes.values, tau, SoftmaxAxis::kColumns);
  Eigen::MatrixXd upstream = 0.5 * (d2a.d_volumes + a2d.d_volumes);
  auto grads = backprop_cross_volume(batch, upstream);

  LossReport report;
  report.l_d2a = d2a.loss;
  report.l_a2d = a2d.loss;
  report.grad_log_tau = 0.5 * (d2a.d_log_tau + a2d.d_log_tau);
  report.degenerate_entries = grads.degenerate_entries;

  if (b >= 2 && lambda != 0.0) {
    // Positives first, then one anchor-swapped hard negative per sample.
    std::vector<Eigen::Index> positive_rows(static_cast<std::size_t>(b));
    std::vector<Eigen::Index> negative_rows(static_cast<std::size_t>(b));
    const auto mined = negatives.empty() ? hard_negative_mine(volumes) : std::vector<HardNegative>{};
    if (!negatives.empty() && static_cast<Eigen::Index>(negatives.size()) != b) {
      throw DimensionMismatch("one hard negative per sample is required");
    }
    for (const auto& hn : negatives.empty() ? std::span<const HardNegative>(mined) : negatives) {
      if (hn.query < 0 || hn.query >= b || hn.negative < 0 || hn.negative >= b || hn.negative == hn.query) {
        throw InvalidSpec("hard negative out of range");
      }
      positive_rows[static_cast<std::size_t>(hn.query)] = hn.query;
      negative_rows[static_cast<std::size_t>(hn.query)] = hn.negative;
    }
    Eigen::MatrixXd inputs(2 * b, head.input_dim());
    inputs.topRows(b) = matching_inputs(batch, positive_rows);
    inputs.bottomRows(b) = matching_inputs(batch, negative_rows);
    std::vector<int> labels(static_cast<std::size_t>(2 * b), 0);
    std::fill(labels.begin(), labels.begin() + b, 1);

    MatchingHead::Cache cache;
    const Eigen::VectorXd logits = head.forward(inputs, &cache);
    Eigen::VectorXd d_logits;
    report.l_dam = dam_loss_from_logits(logits, labels, &d_logits);
    const Eigen::MatrixXd d_inputs = head.backward(cache, lambda * d_logits);

    const auto k = static_cast<Eigen::Index>(batch.k());
    for (Eigen::Index r = 0; r < 2 * b; ++r) {
      const Eigen::Index i = r % b;
      const Eigen::Index a = r < b ? positive_rows[static_cast<std::size_t>(i)]
                                   : negative_rows[static_cast<std::size_t>(i)];
      grads.anchor.row(a) += d_inputs.row(r).segment(0, n);
      for (Eigen::Index m = 1; m < k; ++m)
        grads.datas[static_cast<std::size_t>(m - 1)].row(i) += d_inputs.row(r).segment(m * n, n);
    }
  }

  report.l_tot = total_loss({report.l_d2a, report.l_a2d}, report.l_dam, lambda);
  report.grad_anchor = std::move(grads.anchor);
  report.grad_datas = std::move(grads.datas);
  return report;
}

LossReport pairwise_cosine_objective(const MultimodalBatch& batch, Temperature tau) {
  const Eigen::Index b = batch.size();
  const Eigen::Index n = batch.dim();
  const auto& anchor = batch.anchor().rows();
  const double inv_m = 1.0 / static_cast<double>(batch.datas().size());

  LossReport report;
  report.grad_anchor = Eigen::MatrixXd::Zero(b, n);
  for (const auto& data : batch.datas()) {
    // logits = cos / tau = -(-cos) / tau, so the volume softmax applies to
    // the negated cosine matrix.
    const Eigen::MatrixXd neg_cos = -(data.rows() * anchor.transpose());
    const auto m2a = volume_softmax_loss(neg_cos, tau, SoftmaxAxis::kRows);
    const auto a2m = volume_softmax_loss(neg_cos, tau, SoftmaxAxis::kColumns);
    report.l_d2a += inv_m * m2a.loss;
    report.l_a2d += inv_m * a2m.loss;
    report.grad_log_tau += inv_m * 0.5 * (m2a.d_log_tau + a2m.d_log_tau);
    // d neg_cos(i, j) / d data_i = -anchor_j, / d anchor_j = -data_i
    const Eigen::MatrixXd d_cos = -inv_m * 0.5 * (m2a.d_volumes + a2m.d_volumes);
    report.grad_datas.push_back(d_cos * anchor);
    report.grad_anchor += d_cos.transpose() * data.rows();
  }
  report.l_tot = total_loss({report.l_d2a, report.l_a2d}, 0.0);
  return report;
}

}  // namespace gram
