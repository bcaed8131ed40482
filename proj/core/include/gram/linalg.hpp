#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gram {

using Vector = Eigen::VectorXd;

// Below this volume the Gramian volume is treated as non-differentiable and
// volume_gradient returns a zero subgradient.
inline constexpr double kDegenerateVolume = 1e-9;

// Returns v / ||v||. Throws ZeroVector when ||v|| < 1e-30 and NonFiniteInput
// when any component is NaN or infinite.
Vector normalize(const Vector& v);

// k x k matrix of pairwise inner products. Only the upper triangle is
// computed; the lower triangle is a mirror, so symmetry is exact.
class GramMatrix {
 public:
  GramMatrix() = default;

  // Builds from precomputed inner products. `entries` must be square; the
  // lower triangle is overwritten from the upper one.
  static GramMatrix from_inner_products(Eigen::MatrixXd entries);

  std::size_t order() const { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& entries() const { return entries_; }

 private:
  explicit GramMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {}

  Eigen::MatrixXd entries_;
};

GramMatrix gram_matrix(std::span<const Vector> vectors);

struct Volume {
  double value = 0.0;
  // Determinant of the Gram matrix, clamped at zero.
  double gram_det = 0.0;
};

// Determinant of a symmetric positive semidefinite matrix by diagonally
// pivoted Cholesky. A negative pivot (roundoff-indefinite input) switches to
// the product of eigenvalues with negative ones clamped to zero. The result
// is never negative.
double psd_determinant(const Eigen::MatrixXd& g);

// Volume of the parallelotope whose Gram matrix is `g`. When `ambient_dim`
// is given and smaller than the order of `g` the vectors are linearly
// dependent and the volume is exactly zero.
Volume volume_from_gram(const GramMatrix& g, std::size_t ambient_dim = 0);

Volume gramian_volume(std::span<const Vector> vectors);

// Sensitivity of the volume to the vectors that produced `g`, as the matrix
// C = Vol * G^{-1}. The gradient with respect to vector c is
// sum_r v_r * C(r, c). When Vol <= eps, C is zero and `degenerate` is set.
struct VolumeSensitivity {
  Volume volume;
  Eigen::MatrixXd coefficients;
  bool degenerate = false;
};

VolumeSensitivity volume_sensitivity(const GramMatrix& g,
                                     double eps = kDegenerateVolume,
                                     std::size_t ambient_dim = 0);

struct VolumeGradient {
  Volume volume;
  std::vector<Vector> grads;  // d Vol / d v_i, one per input vector
  bool degenerate = false;
};

VolumeGradient volume_gradient(std::span<const Vector> vectors,
                               double eps = kDegenerateVolume);

}  // namespace gram
