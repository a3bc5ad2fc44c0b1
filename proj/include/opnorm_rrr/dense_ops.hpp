#pragma once

#include "opnorm_rrr/common.hpp"

#include <cstdint>

namespace rrr {

struct ThinSvd {
  DenseMatrix U;
  Vector sigma;  // nonincreasing, strictly positive
  DenseMatrix V;
};

// Singular values below max(rows, cols) * eps * sigma_1 are discarded.
ThinSvd thin_svd(const DenseMatrix& m);
Vector singular_values(const DenseMatrix& m);
double spectral_norm(const DenseMatrix& m);

DenseMatrix pseudo_inverse(const DenseMatrix& m);

// Nearest psd matrix to (M + Mᵀ)/2 in Frobenius norm.
DenseMatrix psd_project(const DenseMatrix& m);

// Count of entries >= 1.
Index sve(const Vector& sigma);

DenseMatrix gaussian_matrix(Index rows, Index cols, std::uint64_t seed);

struct SymmetricEigen {
  Vector values;        // descending
  DenseMatrix vectors;  // matching columns, first nonzero entry positive
};

SymmetricEigen symmetric_eigen(const DenseMatrix& m);

// Flips each column so that its first nonzero entry is positive.
void normalize_signs(DenseMatrix& columns);

// Orthonormal basis of the column space (left singular vectors).
DenseMatrix orthonormal_basis(const DenseMatrix& m);

// Best rank-k approximation in any unitarily invariant norm.
DenseMatrix truncate_rank(const DenseMatrix& m, Index k);

}  // namespace rrr
