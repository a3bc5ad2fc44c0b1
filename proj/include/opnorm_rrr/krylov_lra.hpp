#pragma once

#include "opnorm_rrr/sparse_matrix.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rrr {

// Linear operator given only through products. Columns of the argument block
// are independent; each output column c must satisfy
// ||apply(V, e).col(c) - M V.col(c)|| <= e ||M|| ||V.col(c)||.
struct MatVecOracle {
  using BlockFn = std::function<DenseMatrix(const DenseMatrix&, double)>;

  Index rows = 0;
  Index cols = 0;
  BlockFn apply;
  BlockFn apply_transpose;
  // True when apply/apply_transpose may be invoked from several threads at once.
  bool concurrent_safe = true;

  Vector apply_vector(const Vector& v, double eps) const { return apply(v, eps).col(0); }
  Vector apply_transpose_vector(const Vector& v, double eps) const {
    return apply_transpose(v, eps).col(0);
  }
};

// Raised when the Krylov basis ends with fewer than k columns.
class KrylovRankError : public Error {
 public:
  KrylovRankError(const std::string& what, Index rank) : Error(what), rank_(rank) {}
  Index rank() const { return rank_; }

 private:
  Index rank_;
};

MatVecOracle make_oracle(SparseMatrix m);
MatVecOracle make_oracle(DenseMatrix m);

// Which reading of the accuracy constants to use (the algorithm listing and
// the theorem statement disagree on exponents).
enum class AccuracyForm { AlgorithmBox, TheoremStatement };

struct KrylovParams {
  Index k = 1;
  double epsilon = 0.1;
  int q = 1;  // odd
  double eps_circ = 1e-14;
  double eps_bullet = 1e-14;
  double kappa = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

constexpr double kKrylovAccuracyFloor = 1e-14;
constexpr int kDefaultQCap = 25;

// Smallest odd q >= ln(d/eps)/sqrt(eps), capped.
int default_q(Index d, double epsilon, int cap = kDefaultQCap);
double eps_circ_formula(double epsilon, double kappa, int q, Index k,
                        AccuracyForm form = AccuracyForm::AlgorithmBox);
double eps_bullet_formula(double epsilon, double kappa, int q, Index k,
                          AccuracyForm form = AccuracyForm::AlgorithmBox);
// Defaults for every knob, with accuracies clamped at kKrylovAccuracyFloor.
KrylovParams make_krylov_params(Index k, double epsilon, double kappa, Index d,
                                std::uint64_t seed,
                                AccuracyForm form = AccuracyForm::AlgorithmBox,
                                int q_cap = kDefaultQCap);

struct KrylovDiagnostics {
  int q = 0;
  int blocks = 0;
  int dropped_columns = 0;
  int oracle_calls = 0;  // block products, either direction
  double eps_circ = 0.0;
  double eps_bullet = 0.0;
  double orthogonality_defect = 0.0;  // ||ZᵀZ - I||_F
  double psd_correction = 0.0;        // ||psd(S) - S||_F, S the symmetrized Gram
  int retries = 0;
  double residual_estimate = -1.0;  // negative when not measured
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct LRAResult {
  DenseMatrix Z;
  double sigma_kplus1_estimate = 0.0;  // Ritz value, a lower estimate
  Index krylov_dim = 0;
  KrylovDiagnostics diagnostics;
};

LRAResult noisy_block_krylov(const MatVecOracle& M, const KrylovParams& params);

// Runs up to `attempts` seeds derived from params.seed and keeps the Z with
// the smallest measured ||(I - ZZᵀ)M||. Stops early once a run is within
// (1+eps) of its own Ritz estimate of sigma_{k+1}.
LRAResult block_krylov_with_retries(const MatVecOracle& M, const KrylovParams& params,
                                    int attempts);

LRAResult exact_block_krylov(const MatVecOracle& M, Index k, double epsilon, std::uint64_t seed,
                             int q_cap = kDefaultQCap);
LRAResult exact_block_krylov(const SparseMatrix& M, Index k, double epsilon, std::uint64_t seed);
LRAResult exact_block_krylov(const DenseMatrix& M, Index k, double epsilon, std::uint64_t seed);

// Unnormalized blocks M∘G, (MMᵀ)∘M∘G, ... up to power q (odd), all products at
// accuracy eps.
std::vector<DenseMatrix> krylov_block_powers(const MatVecOracle& M, const DenseMatrix& G, int q,
                                             double eps);

// Power iteration on MᵀM; returns ||M v|| for the final unit v.
double estimate_top_singular(const MatVecOracle& M, int iterations, std::uint64_t seed);

// Rayleigh-Ritz over the Krylov space of MᵀM (full reorthogonalization).
// Never exceeds ||M|| up to oracle error; exact once steps >= rank.
double estimate_spectral_norm(const MatVecOracle& M, int steps, std::uint64_t seed);

// (I - ZZᵀ) M as an oracle.
MatVecOracle residual_oracle(const MatVecOracle& M, const DenseMatrix& Z);

double estimate_sigma_kplus1(const MatVecOracle& M, Index k, double epsilon, std::uint64_t seed);
double estimate_sigma_kplus1(const SparseMatrix& M, Index k, double epsilon, std::uint64_t seed);
double estimate_sigma_kplus1(const DenseMatrix& M, Index k, double epsilon, std::uint64_t seed);

}  // namespace rrr
