#include "gram/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gram/errors.hpp"

namespace gram {

namespace {

void check_finite(const Vector& v) {
  if (!v.allFinite()) throw NonFiniteInput("vector has NaN or infinite components");
}

Eigen::Index check_vectors(std::span<const Vector> vectors) {
  if (vectors.empty()) throw EmptyInput("at least one vector is required");
  const Eigen::Index n = vectors.front().size();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != n) {
      throw DimensionMismatch("vector " + std::to_string(i) + " has dimension " +
                              std::to_string(vectors[i].size()) + ", expected " +
                              std::to_string(n));
    }
    check_finite(vectors[i]);
  }
  return n;
}

double clamped_eigen_product(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g, Eigen::EigenvaluesOnly);
  double det = 1.0;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
    det *= std::max(solver.eigenvalues()(i), 0.0);
  }
  return det;
}

}  // namespace

Vector normalize(const Vector& v) {
  check_finite(v);
  const double norm = v.norm();
  if (!(norm >= 1e-30)) throw ZeroVector("cannot normalize a vector with norm " + std::to_string(norm));
  return v / norm;
}

GramMatrix GramMatrix::from_inner_products(Eigen::MatrixXd entries) {
  if (entries.rows() != entries.cols()) throw DimensionMismatch("Gram matrix must be square");
  for (Eigen::Index i = 0; i < entries.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j) entries(i, j) = entries(j, i);
  return GramMatrix(std::move(entries));
}

GramMatrix gram_matrix(std::span<const Vector> vectors) {
  check_vectors(vectors);
  const auto k = static_cast<Eigen::Index>(vectors.size());
  Eigen::MatrixXd g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j) g(i, j) = vectors[i].dot(vectors[j]);
  return GramMatrix::from_inner_products(std::move(g));
}

double psd_determinant(const Eigen::MatrixXd& g) {
  const Eigen::Index k = g.rows();
  Eigen::MatrixXd a = g;
  double det = 1.0;
  for (Eigen::Index p = 0; p < k; ++p) {
    Eigen::Index pivot = p;
    for (Eigen::Index i = p + 1; i < k; ++i)
      if (a(i, i) > a(pivot, pivot)) pivot = i;
    if (pivot != p) {
      a.row(p).swap(a.row(pivot));
      a.col(p).swap(a.col(pivot));
    }
    const double d = a(p, p);
    if (d < 0.0) return clamped_eigen_product(g);
    if (d == 0.0) return 0.0;
    det *= d;
    // Schur complement update of the trailing block.
    for (Eigen::Index i = p + 1; i < k; ++i) {
      const double lip = a(i, p) / d;
      for (Eigen::Index j = p + 1; j <= i; ++j) {
        a(i, j) -= lip * a(j, p);
        a(j, i) = a(i, j);
      }
    }
  }
  return std::max(det, 0.0);
}

Volume volume_from_gram(const GramMatrix& g, std::size_t ambient_dim) {
  if (g.order() == 0) throw EmptyInput("empty Gram matrix");
  if (!g.entries().allFinite()) throw NonFiniteInput("Gram matrix has non-finite entries");
  if (ambient_dim != 0 && g.order() > ambient_dim) return {};
  const double det = psd_determinant(g.entries());
  return {std::sqrt(det), det};
}

Volume gramian_volume(std::span<const Vector> vectors) {
  const auto n = static_cast<std::size_t>(check_vectors(vectors));
  return volume_from_gram(gram_matrix(vectors), n);
}

VolumeSensitivity volume_sensitivity(const GramMatrix& g, double eps, std::size_t ambient_dim) {
  VolumeSensitivity out;
  out.volume = volume_from_gram(g, ambient_dim);
  const auto k = static_cast<Eigen::Index>(g.order());
  if (out.volume.value <= eps) {
    out.coefficients = Eigen::MatrixXd::Zero(k, k);
    out.degenerate = true;
    return out;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g.entries());
  if (llt.info() != Eigen::Success) {
    throw SingularGram("Gram matrix not invertible although volume is " +
                       std::to_string(out.volume.value));
  }
  out.coefficients = out.volume.value * llt.solve(Eigen::MatrixXd::Identity(k, k));
  if (!out.coefficients.allFinite()) throw SingularGram("inverse Gram matrix is not finite");
  return out;
}

VolumeGradient volume_gradient(std::span<const Vector> vectors, double eps) {
  const Eigen::Index n = check_vectors(vectors);
  const auto sens = volume_sensitivity(gram_matrix(vectors), eps, static_cast<std::size_t>(n));
  VolumeGradient out;
  out.volume = sens.volume;
  out.degenerate = sens.degenerate;
  out.grads.assign(vectors.size(), Vector::Zero(n));
  if (sens.degenerate) return out;
  const auto k = static_cast<Eigen::Index>(vectors.size());
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < k; ++r) out.grads[c] += sens.coefficients(r, c) * vectors[r];
  return out;
}

}  // namespace gram
