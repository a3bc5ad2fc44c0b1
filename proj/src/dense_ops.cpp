#include "opnorm_rrr/dense_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace rrr {

ThinSvd thin_svd(const DenseMatrix& m) {
  ThinSvd out;
  if (m.size() == 0) {
    out.U.resize(m.rows(), 0);
    out.V.resize(m.cols(), 0);
    return out;
  }
  Eigen::BDCSVD<DenseMatrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff && s(rank) > 0.0) ++rank;
  out.sigma = s.head(rank);
  out.U = svd.matrixU().leftCols(rank);
  out.V = svd.matrixV().leftCols(rank);
  return out;
}

Vector singular_values(const DenseMatrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::BDCSVD<DenseMatrix> svd(m);
  return svd.singularValues();
}

double spectral_norm(const DenseMatrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

DenseMatrix pseudo_inverse(const DenseMatrix& m) {
  const ThinSvd svd = thin_svd(m);
  return svd.V * svd.sigma.cwiseInverse().asDiagonal() * svd.U.transpose();
}

DenseMatrix psd_project(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("psd_project: matrix must be square");
  const DenseMatrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(sym);
  const Vector clipped = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
}

Index sve(const Vector& sigma) {
  Index count = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) >= 1.0) ++count;
  return count;
}

DenseMatrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(gen);
  return g;
}

void normalize_signs(DenseMatrix& columns) {
  for (Index j = 0; j < columns.cols(); ++j) {
    for (Index i = 0; i < columns.rows(); ++i) {
      if (columns(i, j) != 0.0) {
        if (columns(i, j) < 0.0) columns.col(j) *= -1.0;
        break;
      }
    }
  }
}

SymmetricEigen symmetric_eigen(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("symmetric_eigen: matrix must be square");
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(m);
  SymmetricEigen out;
  out.values = eig.eigenvalues().reverse();
  out.vectors = eig.eigenvectors().rowwise().reverse();
  normalize_signs(out.vectors);
  return out;
}

DenseMatrix orthonormal_basis(const DenseMatrix& m) { return thin_svd(m).U; }

DenseMatrix truncate_rank(const DenseMatrix& m, Index k) {
  const ThinSvd svd = thin_svd(m);
  const Index r = std::min<Index>(k, svd.sigma.size());
  return svd.U.leftCols(r) * svd.sigma.head(r).asDiagonal() * svd.V.leftCols(r).transpose();
}

}  // namespace rrr
