#include "gram/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "gram/errors.hpp"

namespace gram {

namespace {

constexpr double kUnitNormTolerance = 1e-10;

// Inner products shared by every cross-volume entry: anchor/data products
// for all (i, j) and the data/data products within each sample.
class BatchInnerProducts {
 public:
  explicit BatchInnerProducts(const MultimodalBatch& batch)
      : k_(static_cast<Eigen::Index>(batch.k())), dim_(static_cast<std::size_t>(batch.dim())) {
    const auto& a = batch.anchor().rows();
    anchor_sq_ = a.rowwise().squaredNorm();
    for (const auto& d : batch.datas()) anchor_data_.push_back(d.rows() * a.transpose());
    const Eigen::Index b = batch.size();
    intra_.assign(static_cast<std::size_t>(b), Eigen::MatrixXd(k_ - 1, k_ - 1));
    for (Eigen::Index i = 0; i < b; ++i) {
      auto& m = intra_[static_cast<std::size_t>(i)];
      for (Eigen::Index p = 0; p < k_ - 1; ++p)
        for (Eigen::Index q = p; q < k_ - 1; ++q)
          m(p, q) = batch.datas()[p].rows().row(i).dot(batch.datas()[q].rows().row(i));
    }
  }

  GramMatrix gram(Eigen::Index i, Eigen::Index j) const {
    Eigen::MatrixXd g(k_, k_);
    g(0, 0) = anchor_sq_(j);
    for (Eigen::Index p = 1; p < k_; ++p) {
      g(0, p) = anchor_data_[static_cast<std::size_t>(p - 1)](i, j);
      for (Eigen::Index q = p; q < k_; ++q) g(p, q) = intra_[static_cast<std::size_t>(i)](p - 1, q - 1);
    }
    return GramMatrix::from_inner_products(std::move(g));
  }

  std::size_t dim() const { return dim_; }

 private:
  Eigen::Index k_;
  std::size_t dim_;
  Eigen::VectorXd anchor_sq_;
  std::vector<Eigen::MatrixXd> anchor_data_;  // (i, j) = <data_i, anchor_j>
  std::vector<Eigen::MatrixXd> intra_;
};

}  // namespace

ModalityBatch::ModalityBatch(std::string name, Eigen::MatrixXd rows)
    : name_(std::move(name)), rows_(std::move(rows)) {
  if (!rows_.allFinite()) throw NonFiniteInput("modality '" + name_ + "' has non-finite entries");
  for (Eigen::Index i = 0; i < rows_.rows(); ++i) {
    const double norm = rows_.row(i).norm();
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      throw InconsistentBatch("modality '" + name_ + "' row " + std::to_string(i) +
                              " is not unit-norm (norm " + std::to_string(norm) + ")");
    }
  }
}

ModalityBatch ModalityBatch::normalized(std::string name, const Eigen::MatrixXd& raw) {
  Eigen::MatrixXd rows(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) rows.row(i) = normalize(raw.row(i).transpose()).transpose();
  return ModalityBatch(std::move(name), std::move(rows));
}

MultimodalBatch::MultimodalBatch(ModalityBatch anchor, std::vector<ModalityBatch> datas)
    : anchor_(std::move(anchor)), datas_(std::move(datas)) {
  if (anchor_.size() == 0) throw InconsistentBatch("batch has no samples");
  for (const auto& d : datas_) {
    if (d.size() != anchor_.size()) {
      throw InconsistentBatch("modality '" + d.name() + "' has " + std::to_string(d.size()) +
                              " rows, anchor has " + std::to_string(anchor_.size()));
    }
    if (d.dim() != anchor_.dim()) {
      throw InconsistentBatch("modality '" + d.name() + "' has dimension " +
                              std::to_string(d.dim()) + ", anchor has " + std::to_string(anchor_.dim()));
    }
  }
}

std::vector<Vector> MultimodalBatch::tuple(Eigen::Index data_row, Eigen::Index anchor_row) const {
  std::vector<Vector> out;
  out.reserve(k());
  out.emplace_back(anchor_.rows().row(anchor_row).transpose());
  for (const auto& d : datas_) out.emplace_back(d.rows().row(data_row).transpose());
  return out;
}

CrossVolumeMatrix cross_volume_matrix(const MultimodalBatch& batch, std::size_t threads) {
  const BatchInnerProducts dots(batch);
  const Eigen::Index b = batch.size();
  CrossVolumeMatrix out{Eigen::MatrixXd(b, b)};

  auto fill_rows = [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i)
      for (Eigen::Index j = 0; j < b; ++j)
        out.values(i, j) = volume_from_gram(dots.gram(i, j), dots.dim()).value;
  };

  threads = std::clamp<std::size_t>(threads, 1, static_cast<std::size_t>(b));
  if (threads == 1) {
    fill_rows(0, b);
    return out;
  }
  std::vector<std::jthread> workers;
  const Eigen::Index chunk = (b + static_cast<Eigen::Index>(threads) - 1) / static_cast<Eigen::Index>(threads);
  for (Eigen::Index begin = 0; begin < b; begin += chunk)
    workers.emplace_back(fill_rows, begin, std::min(b, begin + chunk));
  workers.clear();
  return out;
}

Eigen::MatrixXd cosine_matrix(const ModalityBatch& a, const ModalityBatch& b) {
  if (a.size() != b.size() || a.dim() != b.dim()) {
    throw InconsistentBatch("cosine_matrix needs batches of equal size and dimension");
  }
  return a.rows() * b.rows().transpose();
}

CrossVolumeGradients backprop_cross_volume(const MultimodalBatch& batch,
                                           const Eigen::MatrixXd& upstream) {
  const Eigen::Index b = batch.size();
  const Eigen::Index n = batch.dim();
  const auto k = static_cast<Eigen::Index>(batch.k());
  if (upstream.rows() != b || upstream.cols() != b) {
    throw InconsistentBatch("upstream gradient must be B x B");
  }
  const BatchInnerProducts dots(batch);

  CrossVolumeGradients out;
  out.anchor = Eigen::MatrixXd::Zero(b, n);
  out.datas.assign(batch.datas().size(), Eigen::MatrixXd::Zero(b, n));

  const auto& anchor = batch.anchor().rows();
  auto member_row = [&](Eigen::Index r, Eigen::Index i, Eigen::Index j) {
    return r == 0 ? anchor.row(j) : batch.datas()[static_cast<std::size_t>(r - 1)].rows().row(i);
  };

  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      const double w = upstream(i, j);
      if (w == 0.0) continue;
      const auto sens = volume_sensitivity(dots.gram(i, j), kDegenerateVolume, dots.dim());
      if (sens.degenerate) {
        ++out.degenerate_entries;
        continue;
      }
      for (Eigen::Index c = 0; c < k; ++c) {
        auto target = c == 0 ? out.anchor.row(j) : out.datas[static_cast<std::size_t>(c - 1)].row(i);
        for (Eigen::Index r = 0; r < k; ++r) target += (w * sens.coefficients(r, c)) * member_row(r, i, j);
      }
    }
  }
  return out;
}

}  // namespace gram
