#include "opnorm_rrr/krylov_lra.hpp"

#include "opnorm_rrr/dense_ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace rrr {

namespace {

constexpr double kDropTolerance = 1e-12;
// A column that keeps less than this fraction of its norm after projection is
// numerically inside the basis already.
constexpr double kRelativeDrop = 1e-7;
constexpr int kNormSteps = 60;

// Orthogonalizes `block` against `basis` (two passes) and appends the columns
// that survive both drop tests; returns the newly added orthonormal columns.
DenseMatrix extend_basis(DenseMatrix& basis, DenseMatrix block, int& dropped) {
  double scale = 0.0;
  for (Index j = 0; j < block.cols(); ++j) scale = std::max(scale, block.col(j).norm());
  if (scale == 0.0) {
    dropped += static_cast<int>(block.cols());
    return DenseMatrix(basis.rows(), 0);
  }
  Vector before(block.cols());
  for (Index j = 0; j < block.cols(); ++j) before(j) = block.col(j).norm();
  if (basis.cols() > 0) {
    for (int pass = 0; pass < 2; ++pass) block -= basis * (basis.transpose() * block);
  }
  DenseMatrix added(basis.rows(), block.cols());
  Index kept = 0;
  for (Index j = 0; j < block.cols(); ++j) {
    Vector v = block.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < kept; ++i) v -= added.col(i).dot(v) * added.col(i);
    }
    const double nv = v.norm();
    if (nv <= kDropTolerance * scale || nv <= kRelativeDrop * before(j)) {
      ++dropped;
      continue;
    }
    added.col(kept++) = v / nv;
  }
  added.conservativeResize(Eigen::NoChange, kept);
  const Index old = basis.cols();
  basis.conservativeResize(Eigen::NoChange, old + kept);
  basis.rightCols(kept) = added;
  return added;
}

double log_of(double x) { return std::log(std::max(x, 1.0)); }

}  // namespace

MatVecOracle make_oracle(SparseMatrix m) {
  auto shared = std::make_shared<const SparseMatrix>(std::move(m));
  MatVecOracle o;
  o.rows = shared->rows();
  o.cols = shared->cols();
  o.apply = [shared](const DenseMatrix& v, double) { return multiply(*shared, v); };
  o.apply_transpose = [shared](const DenseMatrix& v, double) {
    return multiply_transpose(*shared, v);
  };
  return o;
}

MatVecOracle make_oracle(DenseMatrix m) {
  auto shared = std::make_shared<const DenseMatrix>(std::move(m));
  MatVecOracle o;
  o.rows = shared->rows();
  o.cols = shared->cols();
  o.apply = [shared](const DenseMatrix& v, double) -> DenseMatrix {
    if (v.rows() != shared->cols()) throw DimensionError("oracle: operand has wrong row count");
    return *shared * v;
  };
  o.apply_transpose = [shared](const DenseMatrix& v, double) -> DenseMatrix {
    if (v.rows() != shared->rows()) throw DimensionError("oracle: operand has wrong row count");
    return shared->transpose() * v;
  };
  return o;
}

void KrylovParams::validate() const {
  if (k < 1) throw InvalidArgument("KrylovParams: k must be >= 1");
  if (q < 1 || q % 2 == 0) throw InvalidArgument("KrylovParams: q must be odd and >= 1");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("KrylovParams: epsilon in (0,1)");
  if (!(eps_circ > 0.0) || !(eps_bullet > 0.0))
    throw InvalidArgument("KrylovParams: accuracies must be positive");
  if (!(kappa >= 1.0)) throw InvalidArgument("KrylovParams: kappa must be >= 1");
}

int default_q(Index d, double epsilon, int cap) {
  const double target = std::log(static_cast<double>(d) / epsilon) / std::sqrt(epsilon);
  int q = std::max(1, static_cast<int>(std::ceil(target)));
  if (q % 2 == 0) ++q;
  if (q > cap) q = cap % 2 == 0 ? cap - 1 : cap;
  return std::max(q, 1);
}

double eps_circ_formula(double epsilon, double kappa, int q, Index k, AccuracyForm form) {
  const double kd = static_cast<double>(k);
  double log_den = 0.0;
  if (form == AccuracyForm::AlgorithmBox) {
    log_den = (2.0 + 5.0 * q) * log_of(kappa) + 7.0 * std::log(kd) + q * std::log(3.0);
  } else {
    log_den = 5.0 * q * log_of(kappa) + 11.0 * std::log(kd) + q * std::log(3.0);
  }
  return std::exp(std::log(epsilon) - log_den);
}

double eps_bullet_formula(double epsilon, double kappa, int q, Index k, AccuracyForm form) {
  const double kd = static_cast<double>(k);
  const double root = std::sqrt(static_cast<double>(q) * kd);
  const double kap = std::max(kappa, 1.0);
  if (form == AccuracyForm::AlgorithmBox) return epsilon * epsilon / (48.0 * kap * kap * kap * root * kd);
  return epsilon * epsilon / (48.0 * kap * kap * root * kd);
}

KrylovParams make_krylov_params(Index k, double epsilon, double kappa, Index d,
                                std::uint64_t seed, AccuracyForm form, int q_cap) {
  KrylovParams p;
  p.k = k;
  p.epsilon = epsilon;
  p.kappa = std::max(kappa, 1.0);
  p.q = default_q(d, epsilon, q_cap);
  p.eps_circ = std::max(eps_circ_formula(epsilon, p.kappa, p.q, k, form), kKrylovAccuracyFloor);
  p.eps_bullet = std::max(eps_bullet_formula(epsilon, p.kappa, p.q, k, form), kKrylovAccuracyFloor);
  p.seed = seed;
  return p;
}

nlohmann::json KrylovDiagnostics::to_json() const {
  nlohmann::json j;
  j["q"] = q;
  j["blocks"] = blocks;
  j["dropped_columns"] = dropped_columns;
  j["oracle_calls"] = oracle_calls;
  j["eps_circ"] = eps_circ;
  j["eps_bullet"] = eps_bullet;
  j["orthogonality_defect"] = orthogonality_defect;
  j["psd_correction"] = psd_correction;
  j["retries"] = retries;
  if (residual_estimate >= 0.0) j["residual_estimate"] = residual_estimate;
  j["seed"] = seed;
  return j;
}

LRAResult noisy_block_krylov(const MatVecOracle& M, const KrylovParams& params) {
  params.validate();
  if (params.k > std::min(M.rows, M.cols))
    throw DimensionError("noisy_block_krylov: k exceeds the matrix dimensions");
  LRAResult out;
  KrylovDiagnostics& diag = out.diagnostics;
  diag.q = params.q;
  diag.eps_circ = params.eps_circ;
  diag.eps_bullet = params.eps_bullet;
  diag.seed = params.seed;

  const DenseMatrix G = gaussian_matrix(M.cols, params.k, params.seed);
  DenseMatrix Q(M.rows, 0);
  DenseMatrix fresh = extend_basis(Q, M.apply(G, params.eps_circ), diag.dropped_columns);
  diag.oracle_calls = 1;
  diag.blocks = 1;
  // Each further block applies MMᵀ to the orthonormal columns added last, which
  // spans the same space as the raw powers without their loss of precision.
  for (int i = 1; i <= (params.q - 1) / 2; ++i) {
    if (fresh.cols() == 0 || Q.cols() >= std::min(M.rows, M.cols)) break;
    const DenseMatrix up = M.apply(M.apply_transpose(fresh, params.eps_circ), params.eps_circ);
    diag.oracle_calls += 2;
    ++diag.blocks;
    fresh = extend_basis(Q, up, diag.dropped_columns);
  }
  const Index t = Q.cols();
  if (t < params.k)
    throw KrylovRankError("block Krylov basis has rank " + std::to_string(t) + " < k = " +
                              std::to_string(params.k) + "; increase q or use a fresh seed",
                          t);

  const DenseMatrix W = M.apply_transpose(Q, params.eps_bullet);
  const DenseMatrix Y = M.apply(W, params.eps_bullet);
  diag.oracle_calls += 2;
  const DenseMatrix xi = Q.transpose() * Y;
  const DenseMatrix sym = 0.5 * (xi + xi.transpose());
  const DenseMatrix fixed = psd_project(sym);
  diag.psd_correction = (fixed - sym).norm();
  const SymmetricEigen eig = symmetric_eigen(fixed);
  out.Z = Q * eig.vectors.leftCols(params.k);
  out.krylov_dim = t;
  out.sigma_kplus1_estimate = t > params.k ? std::sqrt(std::max(eig.values(params.k), 0.0)) : 0.0;
  diag.orthogonality_defect =
      (out.Z.transpose() * out.Z - DenseMatrix::Identity(params.k, params.k)).norm();
  return out;
}

LRAResult block_krylov_with_retries(const MatVecOracle& M, const KrylovParams& params,
                                    int attempts) {
  LRAResult best;
  bool have = false;
  std::string last_error;
  Index last_rank = 0;
  const int steps = static_cast<int>(std::min<Index>(std::min(M.rows, M.cols), kNormSteps));
  for (int a = 0; a < std::max(attempts, 1); ++a) {
    KrylovParams p = params;
    if (a > 0) p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(a));
    LRAResult run;
    try {
      run = noisy_block_krylov(M, p);
    } catch (const KrylovRankError& e) {
      last_error = e.what();
      last_rank = e.rank();
      continue;
    }
    run.diagnostics.residual_estimate =
        estimate_spectral_norm(residual_oracle(M, run.Z), steps, derive_seed(p.seed, 77));
    run.diagnostics.retries = a;
    if (!have || run.diagnostics.residual_estimate < best.diagnostics.residual_estimate) {
      best = std::move(run);
      have = true;
    }
    if (best.diagnostics.residual_estimate <=
        (1.0 + params.epsilon) * best.sigma_kplus1_estimate)
      break;
  }
  if (!have) throw KrylovRankError("block Krylov failed on every retry: " + last_error, last_rank);
  return best;
}

LRAResult exact_block_krylov(const MatVecOracle& M, Index k, double epsilon, std::uint64_t seed,
                             int q_cap) {
  KrylovParams p;
  p.k = k;
  p.epsilon = epsilon;
  p.q = default_q(M.cols, epsilon, q_cap);
  p.eps_circ = p.eps_bullet = kKrylovAccuracyFloor;
  p.seed = seed;
  return noisy_block_krylov(M, p);
}

LRAResult exact_block_krylov(const SparseMatrix& M, Index k, double epsilon, std::uint64_t seed) {
  return exact_block_krylov(make_oracle(M), k, epsilon, seed);
}

LRAResult exact_block_krylov(const DenseMatrix& M, Index k, double epsilon, std::uint64_t seed) {
  return exact_block_krylov(make_oracle(M), k, epsilon, seed);
}

std::vector<DenseMatrix> krylov_block_powers(const MatVecOracle& M, const DenseMatrix& G, int q,
                                             double eps) {
  if (q < 1 || q % 2 == 0) throw InvalidArgument("krylov_block_powers: q must be odd");
  std::vector<DenseMatrix> out;
  out.push_back(M.apply(G, eps));
  for (int i = 3; i <= q; i += 2) out.push_back(M.apply(M.apply_transpose(out.back(), eps), eps));
  return out;
}

double estimate_top_singular(const MatVecOracle& M, int iterations, std::uint64_t seed) {
  if (iterations < 1) throw InvalidArgument("estimate_top_singular: iterations must be >= 1");
  Vector v = gaussian_matrix(M.cols, 1, seed).col(0);
  v.normalize();
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Vector w = M.apply_vector(v, 0.0);
    estimate = w.norm();
    Vector z = M.apply_transpose_vector(w, 0.0);
    const double nz = z.norm();
    if (nz == 0.0) return estimate;
    v = z / nz;
  }
  return M.apply_vector(v, 0.0).norm();
}

double estimate_spectral_norm(const MatVecOracle& M, int steps, std::uint64_t seed) {
  steps = static_cast<int>(std::min<Index>(std::max(steps, 1), M.cols));
  DenseMatrix V(M.cols, steps), MV(M.rows, steps);
  Vector v = gaussian_matrix(M.cols, 1, seed).col(0);
  v.normalize();
  Index used = 0;
  for (int j = 0; j < steps; ++j) {
    V.col(j) = v;
    MV.col(j) = M.apply_vector(v, 0.0);
    used = j + 1;
    if (j + 1 == steps) break;
    Vector z = M.apply_transpose_vector(MV.col(j), 0.0);
    const double scale = z.norm();
    for (int pass = 0; pass < 2; ++pass)
      z -= V.leftCols(used) * (V.leftCols(used).transpose() * z);
    const double nz = z.norm();
    if (nz <= 1e-13 * scale || nz == 0.0) break;
    v = z / nz;
  }
  return spectral_norm(MV.leftCols(used));
}

MatVecOracle residual_oracle(const MatVecOracle& M, const DenseMatrix& Z) {
  MatVecOracle o;
  o.rows = M.rows;
  o.cols = M.cols;
  o.concurrent_safe = M.concurrent_safe;
  o.apply = [M, Z](const DenseMatrix& v, double eps) -> DenseMatrix {
    DenseMatrix y = M.apply(v, eps);
    y -= Z * (Z.transpose() * y);
    return y;
  };
  o.apply_transpose = [M, Z](const DenseMatrix& u, double eps) -> DenseMatrix {
    const DenseMatrix w = u - Z * (Z.transpose() * u);
    return M.apply_transpose(w, eps);
  };
  return o;
}

double estimate_sigma_kplus1(const MatVecOracle& M, Index k, double epsilon, std::uint64_t seed) {
  const LRAResult lra = exact_block_krylov(M, k, epsilon, seed);
  const int steps = static_cast<int>(std::min<Index>(std::min(M.rows, M.cols), kNormSteps));
  return estimate_spectral_norm(residual_oracle(M, lra.Z), steps, derive_seed(seed, 1));
}

double estimate_sigma_kplus1(const SparseMatrix& M, Index k, double epsilon, std::uint64_t seed) {
  return estimate_sigma_kplus1(make_oracle(M), k, epsilon, seed);
}

double estimate_sigma_kplus1(const DenseMatrix& M, Index k, double epsilon, std::uint64_t seed) {
  return estimate_sigma_kplus1(make_oracle(M), k, epsilon, seed);
}

}  // namespace rrr
