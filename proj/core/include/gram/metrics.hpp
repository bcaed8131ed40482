#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gram/similarity.hpp"

namespace gram {

// How scores order candidates.
enum class Polarity {
  kSmallerIsCloser,  // volumes
  kLargerIsCloser,   // cosine similarities
};

enum class RetrievalDirection {
  kDataToAnchor,  // query row i, candidates along the row
  kAnchorToData,  // query column i, candidates along the column
};

struct RetrievalReport {
  std::vector<int> ks;
  std::vector<double> recalls;  // one per k, same order
  RetrievalDirection direction = RetrievalDirection::kDataToAnchor;

  // Recall at `k`; throws std::out_of_range when `k` was not requested.
  double at(int k) const;
  double r_at_1() const { return at(1); }
  double r_at_5() const { return at(5); }
  double r_at_10() const { return at(10); }
};

// 0-based rank of the ground-truth (diagonal) candidate for every query.
// Candidates tied with the diagonal count ahead of it when their index is
// lower, so ties never favour the true match beyond index order. NaN scores
// rank behind everything.
std::vector<Eigen::Index> diagonal_ranks(const Eigen::MatrixXd& scores, Polarity polarity,
                                         RetrievalDirection direction);

// Recall@K for every K in `ks`. K larger than B is clamped (recall 1).
RetrievalReport retrieval_recall(const Eigen::MatrixXd& scores, std::span<const int> ks,
                                 Polarity polarity = Polarity::kSmallerIsCloser,
                                 RetrievalDirection direction = RetrievalDirection::kDataToAnchor);

inline RetrievalReport retrieval_recall(const CrossVolumeMatrix& volumes, std::span<const int> ks,
                                        RetrievalDirection direction = RetrievalDirection::kDataToAnchor) {
  return retrieval_recall(volumes.values, ks, Polarity::kSmallerIsCloser, direction);
}

struct AlignmentScore {
  double mean_matched_volume = 0.0;
  double one_minus_gram = 1.0;
};

// Mean volume of every sample's matched tuple, and 1 minus that mean.
AlignmentScore alignment_metric(const MultimodalBatch& batch);

// Sample Pearson correlation. Throws DimensionMismatch for unequal or too
// short inputs and DegenerateVariance when either input is constant.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace gram
