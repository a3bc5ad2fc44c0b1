#pragma once

#include "opnorm_rrr/sparse_matrix.hpp"

#include <cstdint>
#include <vector>

namespace rrr {

struct PreconditionerOptions {
  Index sketch_rows = 0;      // 0 selects default_sketch_rows(c)
  double max_condition = 4.0;  // certified bound on cond(A R^-1)
  int max_attempts = 4;        // rows double per attempt; the last attempt factors A itself
};

struct Preconditioner {
  Index n = 0;
  Index c = 0;
  DenseMatrix r_factor;       // c x c upper triangular in pivot order
  std::vector<Index> pivots;  // pivots[i] is the column of A placed at position i
  Index rank_estimate = 0;
  Index sketch_rows = 0;      // rows of the sketch actually used
  bool exact = false;         // A was factored directly (sketch_rows >= n)
  std::uint64_t seed = 0;     // seed of the accepted sketch
  int attempts = 0;
  // Extreme singular values of A R^-1 restricted to the detected range.
  double sigma_min = 0.0;
  double sigma_max = 0.0;

  double condition() const { return sigma_max / sigma_min; }
};

Index default_sketch_rows(Index c);

Preconditioner build_preconditioner(const SparseMatrix& A, std::uint64_t seed,
                                    const PreconditionerOptions& options = {});

struct SolveStats {
  int iterations = 0;  // max over columns
  bool rebuilt = false;
  std::vector<std::vector<double>> residual_history;  // per column, ||b - A x_t||
};

int iteration_cap();

// x with ||A x - AA⁺b|| <= sqrt(eps_reg) ||(I - AA⁺) b||, down to a floor of
// about 1e-13 ||b||. On hitting the cap the solve is repeated once with a
// freshly seeded preconditioner before ConvergenceError is thrown.
Vector solve(const SparseMatrix& A, const Preconditioner& P, const Vector& b, double eps_reg,
             SolveStats* stats = nullptr);
DenseMatrix solve_multi(const SparseMatrix& A, const Preconditioner& P, const DenseMatrix& rhs,
                        double eps_reg, SolveStats* stats = nullptr);

Vector approx_projection(const SparseMatrix& A, const Preconditioner& P, const Vector& b,
                         double eps_reg);
DenseMatrix approx_projection_multi(const SparseMatrix& A, const Preconditioner& P,
                                    const DenseMatrix& rhs, double eps_reg);

}  // namespace rrr
