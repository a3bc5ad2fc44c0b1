#pragma once

// Dense reference computations for tests. Everything here goes through
// Eigen's JacobiSVD / SelfAdjointEigenSolver directly so that it does not
// share code paths with the library under test.

#include "opnorm_rrr/common.hpp"
#include "opnorm_rrr/krylov_lra.hpp"
#include "opnorm_rrr/sparse_matrix.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

namespace oracle {

// Iterations per decade of 1/eps_reg allowed for the preconditioned solver.
// Calibrated once on sketched tall instances (worst observed ratio 0.67 at
// preconditioned condition about 1.5); the slack covers condition up to 4.
constexpr double kIterationsPerDecade = 2.0;

using rrr::DenseMatrix;
using rrr::Index;
using rrr::Vector;

inline Vector svals(const DenseMatrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<DenseMatrix> svd(m);
  return svd.singularValues();
}

inline double norm2(const DenseMatrix& m) {
  const Vector s = svals(m);
  return s.size() ? s(0) : 0.0;
}

// i-th singular value (0-based), zero past the end.
inline double sigma(const DenseMatrix& m, Index i) {
  const Vector s = svals(m);
  return i < s.size() ? s(i) : 0.0;
}

inline Index numerical_rank(const DenseMatrix& m, double rel = 1e-10) {
  const Vector s = svals(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return (s.array() > rel * s(0)).count();
}

// Orthonormal basis of colspan(m).
inline DenseMatrix range_basis(const DenseMatrix& m, double rel = 1e-10) {
  Eigen::JacobiSVD<DenseMatrix> svd(m, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  Index r = 0;
  if (s.size() && s(0) > 0.0) r = (s.array() > rel * s(0)).count();
  return svd.matrixU().leftCols(r);
}

inline DenseMatrix projector(const DenseMatrix& A) {
  const DenseMatrix U = range_basis(A);
  return U * U.transpose();
}

inline DenseMatrix pinv(const DenseMatrix& m, double rel = 1e-12) {
  Eigen::JacobiSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vector s = svd.singularValues();
  const double cut = s.size() ? rel * s(0) : 0.0;
  for (Index i = 0; i < s.size(); ++i) s(i) = s(i) > cut ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * s.asDiagonal() * svd.matrixU().transpose();
}

// max(||(I - AA⁺)B||, sigma_{k+1}(B))
inline double opt(const DenseMatrix& A, const DenseMatrix& B, Index k) {
  const DenseMatrix P = projector(A);
  const DenseMatrix R = B - P * B;
  return std::max(norm2(R), sigma(B, k));
}

// Bᵀ(I - AA⁺)B
inline DenseMatrix delta(const DenseMatrix& A, const DenseMatrix& B) {
  const DenseMatrix P = projector(A);
  return B.transpose() * (B - P * B);
}

// f applied to the eigenvalues of a symmetric matrix.
template <class F>
DenseMatrix sym_fn(const DenseMatrix& S, F f) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (S + S.transpose()));
  Vector ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) ev(i) = f(ev(i));
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline DenseMatrix random_gaussian(Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(gen);
  return m;
}

inline DenseMatrix random_orthonormal(Index r, Index c, std::uint64_t seed) {
  Eigen::HouseholderQR<DenseMatrix> qr(random_gaussian(r, c, seed));
  return qr.householderQ() * DenseMatrix::Identity(r, c);
}

// U diag(s) Vᵀ with random orthonormal factors.
inline DenseMatrix with_singular_values(Index r, Index c, const Vector& s, std::uint64_t seed) {
  const Index m = s.size();
  const DenseMatrix U = random_orthonormal(r, m, seed);
  const DenseMatrix V = random_orthonormal(c, m, seed + 7919);
  return U * s.asDiagonal() * V.transpose();
}

inline rrr::SparseMatrix random_sparse(Index r, Index c, double density, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<rrr::Triplet> t;
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j)
      if (u(gen) < density) t.push_back({i, j, n(gen)});
  return rrr::SparseMatrix::from_triplets(r, c, std::move(t));
}

// Operator for a dense M whose products are corrupted by a perturbation of
// norm exactly e ||M|| ||v|| per column, in a seeded random direction.
inline rrr::MatVecOracle noisy_oracle(const DenseMatrix& M, std::uint64_t seed) {
  auto m = std::make_shared<const DenseMatrix>(M);
  const double mnorm = norm2(M);
  auto gen = std::make_shared<std::mt19937_64>(seed);
  auto perturb = [mnorm, gen](DenseMatrix y, const DenseMatrix& v, double e) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (Index j = 0; j < y.cols(); ++j) {
      Vector g(y.rows());
      for (Index i = 0; i < g.size(); ++i) g(i) = n(*gen);
      y.col(j) += e * mnorm * v.col(j).norm() * g.normalized();
    }
    return y;
  };
  rrr::MatVecOracle o;
  o.rows = M.rows();
  o.cols = M.cols();
  o.concurrent_safe = false;
  o.apply = [m, perturb](const DenseMatrix& v, double e) { return perturb(*m * v, v, e); };
  o.apply_transpose = [m, perturb](const DenseMatrix& v, double e) {
    return perturb(m->transpose() * v, v, e);
  };
  return o;
}

}  // namespace oracle
