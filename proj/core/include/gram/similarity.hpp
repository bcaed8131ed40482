#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gram/linalg.hpp"

namespace gram {

// B embeddings of one modality, one unit-norm row per sample.
class ModalityBatch {
 public:
  // Rows must already be unit-norm (within 1e-10) and finite.
  ModalityBatch(std::string name, Eigen::MatrixXd rows);

  // Normalizes every row first.
  static ModalityBatch normalized(std::string name, const Eigen::MatrixXd& raw);

  const std::string& name() const { return name_; }
  const Eigen::MatrixXd& rows() const { return rows_; }
  Eigen::Index size() const { return rows_.rows(); }
  Eigen::Index dim() const { return rows_.cols(); }

 private:
  std::string name_;
  Eigen::MatrixXd rows_;
};

// An anchor modality plus k-1 data modalities; row i of every member is the
// same sample.
class MultimodalBatch {
 public:
  MultimodalBatch(ModalityBatch anchor, std::vector<ModalityBatch> datas);

  const ModalityBatch& anchor() const { return anchor_; }
  const std::vector<ModalityBatch>& datas() const { return datas_; }
  std::size_t k() const { return datas_.size() + 1; }
  Eigen::Index size() const { return anchor_.size(); }
  Eigen::Index dim() const { return anchor_.dim(); }

  // Vectors of sample `data_row`'s data modalities combined with anchor row
  // `anchor_row`, anchor first.
  std::vector<Vector> tuple(Eigen::Index data_row, Eigen::Index anchor_row) const;

 private:
  ModalityBatch anchor_;
  std::vector<ModalityBatch> datas_;
};

// values(i, j) = Vol(anchor_j, data_{2,i}, ..., data_{k,i}). Rows index data
// tuples, columns index anchors: data-to-anchor losses read rows and
// anchor-to-data losses read columns.
struct CrossVolumeMatrix {
  Eigen::MatrixXd values;

  Eigen::Index size() const { return values.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return values(i, j); }
};

// Entries are independent k x k determinants, so splitting rows across
// `threads` workers gives bit-identical output.
CrossVolumeMatrix cross_volume_matrix(const MultimodalBatch& batch, std::size_t threads = 1);

// entry (i, j) = <a_i, b_j>.
Eigen::MatrixXd cosine_matrix(const ModalityBatch& a, const ModalityBatch& b);

struct CrossVolumeGradients {
  Eigen::MatrixXd anchor;              // B x n
  std::vector<Eigen::MatrixXd> datas;  // (k-1) x [B x n]
  std::size_t degenerate_entries = 0;
};

// Pulls an upstream gradient dL/dvalues(i, j) back onto every embedding row.
// Entries with volume at or below kDegenerateVolume contribute nothing.
// Accumulation order is fixed (row-major over (i, j)).
CrossVolumeGradients backprop_cross_volume(const MultimodalBatch& batch,
                                           const Eigen::MatrixXd& upstream);

}  // namespace gram
