#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "gram/errors.hpp"
#include "gram/loss.hpp"
#include "gradient_suite.hpp"
#include "test_util.hpp"

namespace t = gram::testing;
using gram::CrossVolumeMatrix;
using gram::ModalityBatch;
using gram::MultimodalBatch;
using gram::Temperature;

namespace {

MultimodalBatch random_batch(std::mt19937_64& rng, int b, int k, int n) {
  std::vector<ModalityBatch> datas;
  for (int m = 1; m < k; ++m) datas.emplace_back("m" + std::to_string(m), t::random_unit_rows(rng, b, n));
  return MultimodalBatch(ModalityBatch("anchor", t::random_unit_rows(rng, b, n)), std::move(datas));
}

// Independent softmax cross-entropy along rows of `logits`, no shifting.
double naive_row_ce(const Eigen::MatrixXd& logits) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double denom = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) denom += std::exp(logits(i, j));
    loss -= std::log(std::exp(logits(i, i)) / denom);
  }
  return loss / static_cast<double>(logits.rows());
}

// Contrastive loss of raw rows: each row is normalized, then volumes are
// recomputed per tuple and pushed through the naive softmax.
struct RawRows {
  Eigen::MatrixXd anchor;
  std::vector<Eigen::MatrixXd> datas;
  double log_tau;

  double loss() const {
    const Eigen::Index b = anchor.rows();
    Eigen::MatrixXd v(b, b);
    for (Eigen::Index i = 0; i < b; ++i)
      for (Eigen::Index j = 0; j < b; ++j) {
        std::vector<Eigen::VectorXd> tuple{anchor.row(j).transpose().normalized()};
        for (const auto& d : datas) tuple.push_back(d.row(i).transpose().normalized());
        v(i, j) = std::sqrt(std::max(0.0, t::cofactor_det(t::naive_gram(tuple))));
      }
    const double tau = std::exp(log_tau);
    return 0.5 * (naive_row_ce(-v / tau) + naive_row_ce(-v.transpose() / tau));
  }
};

// Tangential part of an extrinsic gradient at a unit row.
Eigen::RowVectorXd project(const Eigen::RowVectorXd& g, const Eigen::RowVectorXd& u) {
  return g - u * u.dot(g);
}

}  // namespace

TEST(TemperatureTest, ClampsToRange) {
  EXPECT_NEAR(Temperature().tau(), 0.07, 1e-15);
  EXPECT_NEAR(Temperature::from_log(-50).tau(), 1e-3, 1e-15);
  EXPECT_NEAR(Temperature::from_log(50).tau(), 10.0, 1e-12);
  EXPECT_THROW(Temperature::from_log(std::numeric_limits<double>::quiet_NaN()), gram::NonFiniteInput);
}

TEST(GramContrastiveLoss, SingleSampleIsZero) {
  const CrossVolumeMatrix v{Eigen::MatrixXd::Constant(1, 1, 0.3)};
  const auto loss = gram::gram_contrastive_loss(v, Temperature(0.07));
  EXPECT_EQ(loss.l_d2a, 0.0);
  EXPECT_EQ(loss.l_a2d, 0.0);
}

TEST(GramContrastiveLoss, UniformVolumesGiveLogB) {
  const CrossVolumeMatrix v{Eigen::MatrixXd::Constant(4, 4, 0.42)};
  const auto loss = gram::gram_contrastive_loss(v, Temperature(0.07));
  EXPECT_NEAR(loss.l_d2a, std::log(4.0), 1e-12);
  EXPECT_NEAR(loss.l_a2d, std::log(4.0), 1e-12);
  EXPECT_NEAR(loss.l_d2a, 1.3863, 1e-4);
}

TEST(GramContrastiveLoss, TwoByTwoWorkedExample) {
  CrossVolumeMatrix v{Eigen::MatrixXd(2, 2)};
  v.values << 0.0, 1.0, 1.0, 0.0;
  const auto loss = gram::gram_contrastive_loss(v, Temperature(1.0));
  // -log(e^0 / (e^0 + e^-1)) = log(1 + e^-1)
  const double expected = std::log(1.0 + std::exp(-1.0));
  EXPECT_NEAR(loss.l_d2a, expected, 1e-12);
  EXPECT_NEAR(loss.l_a2d, expected, 1e-12);
  EXPECT_NEAR(expected, 0.31326, 1e-5);
}

TEST(GramContrastiveLoss, MatchesNaiveSoftmaxAndIsStableAtSmallTau) {
  std::mt19937_64 rng(3);
  const auto batch = random_batch(rng, 6, 3, 8);
  const auto v = gram::cross_volume_matrix(batch);
  const auto loss = gram::gram_contrastive_loss(v, Temperature(0.5));
  EXPECT_NEAR(loss.l_d2a, naive_row_ce(-v.values / 0.5), 1e-12);
  EXPECT_NEAR(loss.l_a2d, naive_row_ce(-v.values.transpose() / 0.5), 1e-12);

  // At tau = 1e-3 the naive form under/overflows; the shifted form must not.
  const auto tiny = gram::gram_contrastive_loss(v, Temperature(1e-3));
  EXPECT_TRUE(std::isfinite(tiny.l_d2a));
  EXPECT_TRUE(std::isfinite(tiny.l_a2d));
  EXPECT_GE(tiny.l_d2a, 0.0);
}

TEST(GramContrastiveLoss, NanVolumeIsRejected) {
  CrossVolumeMatrix v{Eigen::MatrixXd::Zero(2, 2)};
  v.values(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(gram::gram_contrastive_loss(v, Temperature()), gram::NonFiniteLoss);
}

TEST(GramContrastiveLoss, PerfectAlignmentFloor) {
  const int b = 5;
  CrossVolumeMatrix v{Eigen::MatrixXd::Ones(b, b)};
  v.values.diagonal().setZero();
  const auto loss = gram::gram_contrastive_loss(v, Temperature(0.01));
  EXPECT_LT(loss.l_d2a, 1e-3);
  EXPECT_LT(loss.l_a2d, 1e-3);
}

TEST(ContrastiveGrad, SingleSampleGradientsAreZero) {
  std::mt19937_64 rng(4);
  const auto batch = random_batch(rng, 1, 3, 5);
  const auto report = gram::contrastive_grad(batch, Temperature());
  EXPECT_EQ(report.l_d2a, 0.0);
  EXPECT_EQ(report.grad_log_tau, 0.0);
  EXPECT_TRUE((report.grad_anchor.array() == 0.0).all());
  for (const auto& g : report.grad_datas) EXPECT_TRUE((g.array() == 0.0).all());
}

TEST(ContrastiveGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const int b = 4, k = 3, n = 8;
  const auto batch = random_batch(rng, b, k, n);
  const Temperature tau(0.3);
  const auto report = gram::contrastive_grad(batch, tau);

  RawRows raw{batch.anchor().rows(), {}, tau.log_tau()};
  for (const auto& d : batch.datas()) raw.datas.push_back(d.rows());
  EXPECT_NEAR(report.l_tot, raw.loss(), 1e-12);
  auto f = [&] { return raw.loss(); };

  EXPECT_LT(t::relative_error(report.grad_log_tau, t::central_difference(f, raw.log_tau, 1e-6)), 1e-5);
  for (int r = 0; r < b; ++r) {
    // FD through normalization yields the tangential component.
    Eigen::RowVectorXd fd(n);
    for (int c = 0; c < n; ++c) fd(c) = t::central_difference(f, raw.anchor(r, c), 1e-6);
    const Eigen::RowVectorXd analytic = project(report.grad_anchor.row(r), batch.anchor().rows().row(r));
    for (int c = 0; c < n; ++c) EXPECT_LT(t::relative_error(analytic(c), fd(c)), 1e-5);
    for (std::size_t m = 0; m < raw.datas.size(); ++m) {
      for (int c = 0; c < n; ++c) fd(c) = t::central_difference(f, raw.datas[m](r, c), 1e-6);
      const Eigen::RowVectorXd a = project(report.grad_datas[m].row(r), batch.datas()[m].rows().row(r));
      for (int c = 0; c < n; ++c) EXPECT_LT(t::relative_error(a(c), fd(c)), 1e-5);
    }
  }
}

TEST(ContrastiveGrad, SymmetricVolumesSplitTemperatureGradientEvenly) {
  // With data rows equal to anchor rows (k = 2), V(i, j) = sin angle(a_i, a_j)
  // is symmetric, so both directions contribute the same d/dlog(tau).
  std::mt19937_64 rng(6);
  const Eigen::MatrixXd rows = t::random_unit_rows(rng, 5, 6);
  const MultimodalBatch batch(ModalityBatch("a", rows), {ModalityBatch("d", rows)});
  const auto v = gram::cross_volume_matrix(batch).values;
  ASSERT_LT((v - v.transpose()).cwiseAbs().maxCoeff(), 1e-15);

  double log_tau = std::log(0.2);
  const auto d2a = gram::volume_softmax_loss(v, Temperature::from_log(log_tau), gram::SoftmaxAxis::kRows);
  const auto a2d = gram::volume_softmax_loss(v, Temperature::from_log(log_tau), gram::SoftmaxAxis::kColumns);
  EXPECT_NEAR(d2a.d_log_tau, a2d.d_log_tau, 1e-10);

  auto rows_loss = [&] { return naive_row_ce(-v / std::exp(log_tau)); };
  auto cols_loss = [&] { return naive_row_ce(-v.transpose() / std::exp(log_tau)); };
  EXPECT_LT(t::relative_error(d2a.d_log_tau, t::central_difference(rows_loss, log_tau, 1e-6)), 1e-6);
  EXPECT_LT(t::relative_error(a2d.d_log_tau, t::central_difference(cols_loss, log_tau, 1e-6)), 1e-6);
}

TEST(ContrastiveGrad, SmallStepDescends) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto batch = random_batch(rng, 6, 3, 10);
    const Temperature tau(0.1);
    const auto report = gram::contrastive_grad(batch, tau);
    const double step = 1e-4;
    Eigen::MatrixXd anchor = batch.anchor().rows() - step * report.grad_anchor;
    std::vector<ModalityBatch> datas;
    for (std::size_t m = 0; m < batch.datas().size(); ++m) {
      datas.push_back(ModalityBatch::normalized(batch.datas()[m].name(),
                                                batch.datas()[m].rows() - step * report.grad_datas[m]));
    }
    const MultimodalBatch moved(ModalityBatch::normalized("anchor", anchor), std::move(datas));
    const auto before = gram::gram_contrastive_loss(gram::cross_volume_matrix(batch), tau);
    const auto after = gram::gram_contrastive_loss(gram::cross_volume_matrix(moved), tau);
    EXPECT_LT(after.l_d2a + after.l_a2d, before.l_d2a + before.l_a2d);
  }
}

TEST(DamLoss, Examples) {
  const gram::MatchLabel near_perfect[] = {{1, 0.99999}};
  EXPECT_NEAR(gram::dam_loss(near_perfect), 1e-5, 1e-9);

  const gram::MatchLabel coin[] = {{0, 0.5}};
  EXPECT_NEAR(gram::dam_loss(coin), std::log(2.0), 1e-15);

  const gram::MatchLabel pair[] = {{1, 0.9}, {0, 0.2}};
  EXPECT_NEAR(gram::dam_loss(pair), -(std::log(0.9) + std::log(0.8)) / 2, 1e-15);
  EXPECT_NEAR(gram::dam_loss(pair), 0.16425, 1e-5);
}

TEST(DamLoss, InvalidLabels) {
  EXPECT_THROW(gram::dam_loss(std::span<const gram::MatchLabel>{}), gram::EmptyInput);
  const gram::MatchLabel bad_y[] = {{2, 0.5}};
  EXPECT_THROW(gram::dam_loss(bad_y), gram::Error);
  const gram::MatchLabel bad_p[] = {{1, 1.0}};
  EXPECT_THROW(gram::dam_loss(bad_p), gram::Error);
}

TEST(DamLoss, LogitFormAgreesAndStaysFinite) {
  Eigen::VectorXd logits(4);
  logits << 2.0, -1.0, 0.3, -0.7;
  const int labels[] = {1, 0, 0, 1};
  std::vector<gram::MatchLabel> preds;
  for (int i = 0; i < 4; ++i) preds.push_back({labels[i], 1.0 / (1.0 + std::exp(-logits(i)))});
  Eigen::VectorXd d;
  EXPECT_NEAR(gram::dam_loss_from_logits(logits, labels, &d), gram::dam_loss(preds), 1e-14);
  for (int i = 0; i < 4; ++i) {
    auto f = [&] { return gram::dam_loss_from_logits(logits, labels); };
    EXPECT_NEAR(d(i), t::central_difference(f, logits(i), 1e-6), 1e-9);
  }

  Eigen::VectorXd extreme(2);
  extreme << 800.0, -800.0;
  const int wrong[] = {0, 1};
  EXPECT_NEAR(gram::dam_loss_from_logits(extreme, wrong), 800.0, 1e-9);
}

TEST(HardNegativeMine, Examples) {
  CrossVolumeMatrix two{Eigen::MatrixXd(2, 2)};
  two.values << 0.0, 0.3, 0.7, 0.0;
  const std::vector<gram::HardNegative> expected_two{{0, 1}, {1, 0}};
  EXPECT_EQ(gram::hard_negative_mine(two), expected_two);

  CrossVolumeMatrix three{Eigen::MatrixXd::Constant(3, 3, 0.5)};
  three.values.row(0) << 0.0, 0.9, 0.2;
  EXPECT_EQ(gram::hard_negative_mine(three)[0].negative, 2);

  CrossVolumeMatrix tied{Eigen::MatrixXd::Constant(3, 3, 0.5)};
  tied.values.diagonal().setZero();
  EXPECT_EQ(gram::hard_negative_mine(tied)[0].negative, 1);
  EXPECT_EQ(gram::hard_negative_mine(tied)[1].negative, 0);
  EXPECT_EQ(gram::hard_negative_mine(tied)[2].negative, 0);
}

TEST(HardNegativeMine, NeedsTwoSamples) {
  EXPECT_THROW(gram::hard_negative_mine(CrossVolumeMatrix{Eigen::MatrixXd::Zero(1, 1)}), gram::BatchTooSmall);
}

TEST(TotalLoss, Examples) {
  EXPECT_EQ(gram::total_loss({0.0, 0.0}, 0.0), 0.0);
  EXPECT_NEAR(gram::total_loss({std::log(4.0), std::log(4.0)}, 0.0), std::log(4.0), 1e-15);
  EXPECT_NEAR(gram::total_loss({0.31326, 0.31326}, 0.6931), 0.38257, 1e-5);
}

TEST(GramObjective, ReportRecombinesParts) {
  std::mt19937_64 rng(8);
  const auto batch = random_batch(rng, 6, 3, 8);
  gram::MatchingHead head(3, 8, 1);
  const auto report = gram::gram_objective(batch, Temperature(), head);
  EXPECT_EQ(report.l_tot, 0.5 * (report.l_d2a + report.l_a2d) + 0.1 * report.l_dam);
  EXPECT_GT(report.l_dam, 0.0);
  EXPECT_TRUE(std::isfinite(report.l_tot));
}

TEST(PairwiseCosineObjective, MatchesFiniteDifferences) {
  std::mt19937_64 rng(9);
  const int b = 5, n = 6;
  const auto batch = random_batch(rng, b, 3, n);
  const Temperature tau(0.2);
  const auto report = gram::pairwise_cosine_objective(batch, tau);

  Eigen::MatrixXd anchor = batch.anchor().rows();
  std::vector<Eigen::MatrixXd> datas;
  for (const auto& d : batch.datas()) datas.push_back(d.rows());
  double log_tau = tau.log_tau();
  // Cosine logits are bilinear in the rows, so no normalization here.
  auto f = [&] {
    double s = 0.0;
    for (const auto& d : datas) {
      const Eigen::MatrixXd logits = d * anchor.transpose() / std::exp(log_tau);
      s += 0.5 * (naive_row_ce(logits) + naive_row_ce(logits.transpose()));
    }
    return s / static_cast<double>(datas.size());
  };
  EXPECT_NEAR(report.l_tot, f(), 1e-12);
  EXPECT_LT(t::relative_error(report.grad_log_tau, t::central_difference(f, log_tau, 1e-6)), 1e-5);
  for (int r = 0; r < b; ++r)
    for (int c = 0; c < n; ++c) {
      EXPECT_LT(t::relative_error(report.grad_anchor(r, c), t::central_difference(f, anchor(r, c), 1e-6)), 1e-5);
      for (std::size_t m = 0; m < datas.size(); ++m)
        EXPECT_LT(t::relative_error(report.grad_datas[m](r, c), t::central_difference(f, datas[m](r, c), 1e-6)),
                  1e-5);
    }
}

TEST(GramObjective, FullGradientMatchesFiniteDifferences) {
  const auto result = t::run_gradient_suite();
  for (const auto& note : result.failure_notes) ADD_FAILURE() << note;
  EXPECT_EQ(result.configurations, 50);
  EXPECT_EQ(result.failures, 0);
  EXPECT_GT(result.checked, 5000);
}

TEST(GramObjective, LambdaScalesMatchingTerm) {
  std::mt19937_64 rng(11);
  const auto batch = random_batch(rng, 6, 3, 8);
  gram::MatchingHead head(3, 8, 2);
  const auto off = gram::gram_objective(batch, Temperature(), head, 0.0);
  const auto on = gram::gram_objective(batch, Temperature(), head, 0.5);
  const auto contrastive = gram::contrastive_grad(batch, Temperature());
  EXPECT_EQ(off.l_dam, 0.0);
  EXPECT_NEAR(off.l_tot, contrastive.l_tot, 1e-15);
  EXPECT_TRUE(off.grad_anchor.isApprox(contrastive.grad_anchor, 1e-14));
  EXPECT_NEAR(on.l_tot - 0.5 * on.l_dam, contrastive.l_tot, 1e-14);
}
