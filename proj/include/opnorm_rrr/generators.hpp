#pragma once

#include "opnorm_rrr/sparse_matrix.hpp"

#include <cstdint>

namespace rrr {

struct RegressionInstance {
  SparseMatrix A;  // n x c
  SparseMatrix B;  // n x d
};

// 3x2 / 3x2 pair whose Frobenius-optimal rank-1 fit has spectral cost sqrt(2)
// while the optimum is 1 + gamma.
RegressionInstance intro_example(double gamma);

// B has i.i.d. entries that are nonzero with probability `density` and then
// uniform on [0, 1]; A is the first c columns of B.
RegressionInstance sparse_uniform(Index n, Index d, Index c, double density, std::uint64_t seed);

// Dense Gaussian A (n x c) and B (n x d) stored sparsely.
RegressionInstance random_dense(Index n, Index c, Index d, std::uint64_t seed);

}  // namespace rrr
