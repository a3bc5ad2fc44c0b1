#pragma once

#include "opnorm_rrr/cheb_poly.hpp"
#include "opnorm_rrr/krylov_lra.hpp"
#include "opnorm_rrr/sketch_regression.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>

namespace rrr {

enum class RegularizeMode { Auto, On, Off };
enum class PolyEvalMode { Auto, Monomial, Chebyshev };

// Above this coefficient norm the oracles switch from monomial accumulation
// to the Chebyshev recurrence when the mode is Auto.
constexpr double kMonomialModeLimit = 1e8;

struct OpNormRRRConfig {
  Index k = 1;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  int degree_cap = 60;
  RegularizeMode regularize = RegularizeMode::Auto;
  int retry_budget = 3;  // Krylov attempts, including the first
  PolyEvalMode poly_mode = PolyEvalMode::Auto;
  // Caller-supplied bound on cond(AA⁺B); positive values turn Auto regularization off.
  double trusted_kappa = 0.0;
  AccuracyForm accuracy_form = AccuracyForm::AlgorithmBox;

  void validate() const;
};

struct BetaEstimate {
  double beta = 0.0;
  double sigma_kplus1_B = 0.0;
  double proj_residual_norm = 0.0;
};

// Exact products with A^+ style projection on top of a preconditioner.
struct ProjectionContext {
  std::shared_ptr<const SparseMatrix> A;
  std::shared_ptr<const Preconditioner> P;
};

// ||(I - AA⁺)B|| estimated with projections at eps_reg = (eps/16)^2.
double estimate_projection_residual(const ProjectionContext& ctx, const MatVecOracle& B,
                                    double epsilon, std::uint64_t seed);

BetaEstimate estimate_beta(const ProjectionContext& ctx, const MatVecOracle& B, Index k,
                           double epsilon, std::uint64_t seed);
BetaEstimate estimate_beta(const SparseMatrix& A, const Preconditioner& P, const SparseMatrix& B,
                           Index k, double epsilon, std::uint64_t seed);

using BlockMap = std::function<DenseMatrix(const DenseMatrix&)>;

// V -> Bᵀ(BV - proj(BV)) / beta², i.e. ΔV/beta² with Δ = Bᵀ(I - AA⁺)B.
BlockMap make_delta_oracle(const ProjectionContext& ctx, const MatVecOracle& B, double beta,
                           double eps_reg);

struct MPrimeContext {
  ProjectionContext proj;
  MatVecOracle B;
  Polynomial r;
  double beta = 1.0;
  double kappa_hat = 1.0;
  double epsilon = 0.1;
  PolyEvalMode mode = PolyEvalMode::Auto;

  // Mode actually used: Auto resolves by coefficient norm and series availability.
  PolyEvalMode resolved_mode() const;
};

// M' V and M'ᵀ V for M' = AA⁺B r(Δ/beta²)/beta, each column to accuracy eps_f ||M'|| ||v||.
DenseMatrix oracle_Mprime(const MPrimeContext& ctx, const DenseMatrix& V, double eps_f);
DenseMatrix oracle_MprimeT(const MPrimeContext& ctx, const DenseMatrix& V, double eps_f);
MatVecOracle make_mprime_oracle(std::shared_ptr<const MPrimeContext> ctx);

struct RegularizedB {
  MatVecOracle oracle;       // B + alpha G Fᵀ
  double alpha = 0.0;
  DenseMatrix G;             // n x (k+1)
  std::vector<Index> columns;  // Fᵀ v = v[columns]
};

// B + alpha G Fᵀ with alpha = eps sigma_{k+1}(B) / (6 sqrt(n)); needs rank(A) >= k+1.
RegularizedB regularize_B(const SparseMatrix& B, Index n, Index d, Index k, double sigma_kplus1_B,
                          double epsilon, std::uint64_t seed, Index rank_A);

struct RRRSolution {
  DenseMatrix Z;        // n x k, orthonormal, inside colspan(A)
  DenseMatrix X_left;   // c x k
  DenseMatrix X_right;  // k x d
  double beta = 0.0;
  double cost_estimate = 0.0;
  nlohmann::json diagnostics;
};

RRRSolution solve_rrr(const SparseMatrix& A, const SparseMatrix& B, const OpNormRRRConfig& config);

// ||A X_left X_right - B|| from below (Rayleigh-Ritz, `steps` products each way).
double estimate_cost(const SparseMatrix& A, const SparseMatrix& B, const DenseMatrix& X_left,
                     const DenseMatrix& X_right, int steps, std::uint64_t seed);

}  // namespace rrr
