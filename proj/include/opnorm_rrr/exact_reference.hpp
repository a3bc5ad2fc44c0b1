#pragma once

#include "opnorm_rrr/common.hpp"

namespace rrr {

struct DenseRRRInstance {
  DenseMatrix A;  // n x c
  DenseMatrix B;  // n x d
  Index k = 1;

  void validate() const;
};

struct FrobeniusSolution {
  DenseMatrix X;
  double cost_F = 0.0;
  double cost_op = 0.0;
};

FrobeniusSolution frobenius_rrr(const DenseRRRInstance& inst);

// max(||(I - AA⁺)B||, sigma_{k+1}(B))
double opt_value(const DenseRRRInstance& inst);

struct SouRantzerSolution {
  DenseMatrix X;
  double cost = 0.0;
};

// Dense X_beta with ||AX - B|| <= beta; requires beta > opt_value(inst).
SouRantzerSolution sou_rantzer_solution(const DenseRRRInstance& inst, double beta);

// Threshold of sigma_{k+1}(UᵀB (beta² I - Δ)^(-1/2)) <= 1 located by bisection.
double binary_search_opt(const DenseRRRInstance& inst, double tol);

struct DensePipelineResult {
  DenseMatrix X;
  double opt = 0.0;
  double beta = 0.0;
};

// Whole dense route at working size: exact optimum from eigenvalues, then
// X_beta at beta = (1 + epsilon) opt, sharing one eigendecomposition of Δ.
// The cost is left to the caller.
DensePipelineResult sou_rantzer_pipeline(const DenseRRRInstance& inst, double epsilon);

}  // namespace rrr
