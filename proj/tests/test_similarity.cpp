#include <cmath>
#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gram/errors.hpp"
#include "gram/similarity.hpp"
#include "test_util.hpp"

namespace t = gram::testing;
using gram::ModalityBatch;
using gram::MultimodalBatch;

namespace {

MultimodalBatch random_batch(std::mt19937_64& rng, int b, int k, int n) {
  std::vector<ModalityBatch> datas;
  for (int m = 1; m < k; ++m) datas.emplace_back("m" + std::to_string(m), t::random_unit_rows(rng, b, n));
  return MultimodalBatch(ModalityBatch("anchor", t::random_unit_rows(rng, b, n)), std::move(datas));
}

}  // namespace

TEST(ModalityBatchTest, RejectsNonUnitRows) {
  Eigen::MatrixXd rows(2, 2);
  rows << 1, 0, 1, 1;
  EXPECT_THROW(ModalityBatch("x", rows), gram::InconsistentBatch);
  const auto normalized = ModalityBatch::normalized("x", rows);
  EXPECT_NEAR(normalized.rows().row(1).norm(), 1.0, 1e-15);
}

TEST(MultimodalBatchTest, RejectsMismatchedMembers) {
  std::mt19937_64 rng(1);
  std::vector<ModalityBatch> short_data{ModalityBatch("d", t::random_unit_rows(rng, 3, 4))};
  EXPECT_THROW(MultimodalBatch(ModalityBatch("a", t::random_unit_rows(rng, 4, 4)), short_data),
               gram::InconsistentBatch);
  std::vector<ModalityBatch> wide_data{ModalityBatch("d", t::random_unit_rows(rng, 4, 5))};
  EXPECT_THROW(MultimodalBatch(ModalityBatch("a", t::random_unit_rows(rng, 4, 4)), wide_data),
               gram::InconsistentBatch);
}

TEST(CrossVolumeMatrixTest, SingleSample) {
  std::mt19937_64 rng(2);
  const auto batch = random_batch(rng, 1, 3, 5);
  const auto v = gram::cross_volume_matrix(batch);
  ASSERT_EQ(v.size(), 1);
  EXPECT_NEAR(v(0, 0), gram::gramian_volume(batch.tuple(0, 0)).value, 1e-12);
}

TEST(CrossVolumeMatrixTest, MatchedPairsCollinear) {
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(2, 2);
  const MultimodalBatch batch(ModalityBatch("a", e), {ModalityBatch("d", e)});
  const auto v = gram::cross_volume_matrix(batch);
  EXPECT_NEAR(v(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(v(1, 1), 0.0, 1e-15);
  EXPECT_NEAR(v(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(v(1, 0), 1.0, 1e-15);
}

TEST(CrossVolumeMatrixTest, EveryEntryMatchesDirectVolume) {
  std::mt19937_64 rng(3);
  const auto batch = random_batch(rng, 4, 3, 8);
  const auto v = gram::cross_volume_matrix(batch);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      // Element-wise oracle: anchor j with sample i's data modalities.
      std::vector<Eigen::VectorXd> tuple{batch.anchor().rows().row(j).transpose()};
      for (const auto& d : batch.datas()) tuple.push_back(d.rows().row(i).transpose());
      EXPECT_NEAR(v(i, j), std::sqrt(std::max(0.0, t::cofactor_det(t::naive_gram(tuple)))), 1e-12);
      EXPECT_NEAR(v(i, j), gram::gramian_volume(tuple).value, 1e-12);
      EXPECT_GE(v(i, j), 0.0);
      EXPECT_LE(v(i, j), 1.0 + 1e-12);
    }
}

TEST(CrossVolumeMatrixTest, ThreadedMatchesSerialBitForBit) {
  std::mt19937_64 rng(4);
  const auto batch = random_batch(rng, 37, 4, 12);
  const auto serial = gram::cross_volume_matrix(batch, 1);
  for (std::size_t threads : {2u, 3u, 8u, 64u}) {
    EXPECT_EQ(gram::cross_volume_matrix(batch, threads).values, serial.values);
  }
}

TEST(CrossVolumeMatrixTest, PairVolumesComplementCosines) {
  std::mt19937_64 rng(5);
  const auto batch = random_batch(rng, 6, 2, 7);
  const auto v = gram::cross_volume_matrix(batch).values;
  // Entry (i, j) pairs data i with anchor j.
  const auto c = gram::cosine_matrix(batch.datas()[0], batch.anchor());
  EXPECT_LT(((1.0 - v.array().square()) - c.array().square()).abs().maxCoeff(), 1e-10);
}

TEST(CrossVolumeMatrixTest, SamplePermutationIsEquivariant) {
  std::mt19937_64 rng(6);
  const int b = 7;
  const auto batch = random_batch(rng, b, 3, 6);
  std::vector<int> perm(b);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto permute = [&](const ModalityBatch& m) {
    Eigen::MatrixXd rows(b, m.dim());
    for (int i = 0; i < b; ++i) rows.row(i) = m.rows().row(perm[static_cast<std::size_t>(i)]);
    return ModalityBatch(m.name(), rows);
  };
  std::vector<ModalityBatch> datas;
  for (const auto& d : batch.datas()) datas.push_back(permute(d));
  const MultimodalBatch permuted(permute(batch.anchor()), std::move(datas));
  const auto v = gram::cross_volume_matrix(batch);
  const auto vp = gram::cross_volume_matrix(permuted);
  for (int i = 0; i < b; ++i)
    for (int j = 0; j < b; ++j)
      EXPECT_NEAR(vp(i, j), v(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]), 1e-14);
}

TEST(CosineMatrixTest, Examples) {
  const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_EQ(gram::cosine_matrix(ModalityBatch("a", e), ModalityBatch("b", e)), e);

  std::mt19937_64 rng(7);
  const Eigen::MatrixXd rows = t::random_unit_rows(rng, 3, 5);
  const auto anti = gram::cosine_matrix(ModalityBatch("a", rows), ModalityBatch("b", -rows));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(anti(i, i), -1.0, 1e-15);

  const Eigen::MatrixXd other = t::random_unit_rows(rng, 3, 5);
  const auto c = gram::cosine_matrix(ModalityBatch("a", rows), ModalityBatch("b", other));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int d = 0; d < 5; ++d) dot += rows(i, d) * other(j, d);
      EXPECT_NEAR(c(i, j), dot, 1e-14);
    }
}

TEST(CosineMatrixTest, RejectsMismatch) {
  std::mt19937_64 rng(8);
  EXPECT_THROW(gram::cosine_matrix(ModalityBatch("a", t::random_unit_rows(rng, 3, 4)),
                                   ModalityBatch("b", t::random_unit_rows(rng, 2, 4))),
               gram::InconsistentBatch);
}

TEST(BackpropCrossVolumeTest, MatchesFiniteDifferencesOfWeightedSum) {
  std::mt19937_64 rng(9);
  const int b = 4, k = 3, n = 6;
  auto batch = random_batch(rng, b, k, n);
  Eigen::MatrixXd weights = Eigen::MatrixXd::Random(b, b);
  const auto grads = gram::backprop_cross_volume(batch, weights);

  // The cross-volume entries are defined for any vectors, so perturb raw
  // copies and recompute each entry with gramian_volume.
  Eigen::MatrixXd anchor = batch.anchor().rows();
  std::vector<Eigen::MatrixXd> datas;
  for (const auto& d : batch.datas()) datas.push_back(d.rows());
  auto weighted = [&] {
    double s = 0.0;
    for (int i = 0; i < b; ++i)
      for (int j = 0; j < b; ++j) {
        std::vector<Eigen::VectorXd> tuple{anchor.row(j).transpose()};
        for (const auto& d : datas) tuple.push_back(d.row(i).transpose());
        s += weights(i, j) * gram::gramian_volume(tuple).value;
      }
    return s;
  };
  for (int r = 0; r < b; ++r)
    for (int c = 0; c < n; ++c) {
      EXPECT_LT(t::relative_error(grads.anchor(r, c), t::central_difference(weighted, anchor(r, c), 1e-6)), 1e-6);
      for (std::size_t m = 0; m < datas.size(); ++m) {
        EXPECT_LT(t::relative_error(grads.datas[m](r, c), t::central_difference(weighted, datas[m](r, c), 1e-6)),
                  1e-6);
      }
    }
}
