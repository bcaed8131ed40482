#include "gram/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gram/errors.hpp"

namespace gram {

double RetrievalReport::at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return recalls[i];
  throw std::out_of_range("recall@" + std::to_string(k) + " was not computed");
}

std::vector<Eigen::Index> diagonal_ranks(const Eigen::MatrixXd& scores, Polarity polarity,
                                         RetrievalDirection direction) {
  if (scores.rows() != scores.cols() || scores.rows() == 0) {
    throw NonSquare("retrieval needs a nonempty square score matrix");
  }
  const Eigen::Index b = scores.rows();
  const bool by_row = direction == RetrievalDirection::kDataToAnchor;
  auto score = [&](Eigen::Index query, Eigen::Index cand) {
    return by_row ? scores(query, cand) : scores(cand, query);
  };
  auto closer = [&](double a, double b) {
    return polarity == Polarity::kSmallerIsCloser ? a < b : a > b;
  };

  std::vector<Eigen::Index> ranks(static_cast<std::size_t>(b));
  for (Eigen::Index q = 0; q < b; ++q) {
    const double truth = score(q, q);
    if (std::isnan(truth)) {
      ranks[static_cast<std::size_t>(q)] = b - 1;
      continue;
    }
    Eigen::Index rank = 0;
    for (Eigen::Index c = 0; c < b; ++c) {
      if (c == q) continue;
      const double s = score(q, c);
      if (closer(s, truth) || (s == truth && c < q) || std::isnan(s)) ++rank;
    }
    ranks[static_cast<std::size_t>(q)] = rank;
  }
  return ranks;
}

RetrievalReport retrieval_recall(const Eigen::MatrixXd& scores, std::span<const int> ks,
                                 Polarity polarity, RetrievalDirection direction) {
  const auto ranks = diagonal_ranks(scores, polarity, direction);
  RetrievalReport report;
  report.direction = direction;
  report.ks.assign(ks.begin(), ks.end());
  for (int k : ks) {
    if (k < 1) throw std::invalid_argument("recall cutoff must be positive");
    std::size_t hits = 0;
    for (auto r : ranks)
      if (r < k) ++hits;
    report.recalls.push_back(static_cast<double>(hits) / static_cast<double>(ranks.size()));
  }
  return report;
}

AlignmentScore alignment_metric(const MultimodalBatch& batch) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    const auto tuple = batch.tuple(i, i);
    sum += gramian_volume(tuple).value;
  }
  AlignmentScore score;
  score.mean_matched_volume = sum / static_cast<double>(batch.size());
  score.one_minus_gram = 1.0 - score.mean_matched_volume;
  return score;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DimensionMismatch("pearson inputs differ in length");
  if (xs.size() < 2) throw DimensionMismatch("pearson needs at least two points");
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateVariance("pearson input has zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace gram
