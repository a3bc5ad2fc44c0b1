#include "opnorm_rrr/rrr_solver.hpp"

#include "opnorm_rrr/dense_ops.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace rrr {

namespace {

constexpr int kNormSteps = 60;
constexpr int kCostSteps = 100;
constexpr int kTopSingularIterations = 30;
constexpr double kKappaCap = 1e8;

enum Stream : std::uint64_t {
  kSeedPreconditioner = 1,
  kSeedSigma = 2,
  kSeedResidual = 3,
  kSeedRegularize = 4,
  kSeedKrylov = 5,
  kSeedCost = 6,
  kSeedNorms = 7,
  kSeedSigmaTilde = 8,
};

double regression_eps(double e) { return std::clamp(e, 1e-300, 0.25); }

int norm_steps(const MatVecOracle& M, int cap) {
  return static_cast<int>(std::min<Index>(std::min(M.rows, M.cols), cap));
}

MatVecOracle projected_oracle(const ProjectionContext& ctx, const MatVecOracle& B,
                              double eps_reg) {
  MatVecOracle o;
  o.rows = B.rows;
  o.cols = B.cols;
  o.apply = [ctx, B, eps_reg](const DenseMatrix& v, double) {
    return approx_projection_multi(*ctx.A, *ctx.P, B.apply(v, 0.0), eps_reg);
  };
  o.apply_transpose = [ctx, B, eps_reg](const DenseMatrix& u, double) {
    return B.apply_transpose(approx_projection_multi(*ctx.A, *ctx.P, u, eps_reg), 0.0);
  };
  return o;
}

MatVecOracle residual_of_projection(const ProjectionContext& ctx, const MatVecOracle& B,
                                    double eps_reg) {
  MatVecOracle o;
  o.rows = B.rows;
  o.cols = B.cols;
  o.apply = [ctx, B, eps_reg](const DenseMatrix& v, double) -> DenseMatrix {
    const DenseMatrix bv = B.apply(v, 0.0);
    return bv - approx_projection_multi(*ctx.A, *ctx.P, bv, eps_reg);
  };
  o.apply_transpose = [ctx, B, eps_reg](const DenseMatrix& u, double) {
    const DenseMatrix w = u - approx_projection_multi(*ctx.A, *ctx.P, u, eps_reg);
    return B.apply_transpose(w, 0.0);
  };
  return o;
}

// Applies r(Δ/beta²) to the block V.
DenseMatrix apply_polynomial(const MPrimeContext& ctx, const DenseMatrix& V, double eps_r) {
  const PolyEvalMode mode = ctx.resolved_mode();
  const int deg = ctx.r.degree();
  if (mode == PolyEvalMode::Monomial) {
    const auto& c = ctx.r.monomial_coeffs();
    const double eps_reg = eps_r / (ctx.kappa_hat * std::max(ctx.r.l1_norm(), 1.0));
    const BlockMap delta = make_delta_oracle(ctx.proj, ctx.B, ctx.beta, regression_eps(eps_reg));
    DenseMatrix apx = V;
    DenseMatrix y = (c.empty() ? 0.0 : c[0]) * V;
    for (int i = 1; i <= deg; ++i) {
      apx = delta(apx);
      y += c[i] * apx;
    }
    return y;
  }
  const ChebyshevSeries& s = *ctx.r.chebyshev();
  const double eps_reg = eps_r / (ctx.kappa_hat * std::max(ctx.r.chebyshev_l1_norm(), 1.0) *
                                  (deg + 1.0) * (deg + 1.0));
  const BlockMap delta = make_delta_oracle(ctx.proj, ctx.B, ctx.beta, regression_eps(eps_reg));
  const double scale = 2.0 / (s.hi - s.lo);
  const double shift = (s.hi + s.lo) / (s.hi - s.lo);
  // Operator mapped so that [lo, hi] becomes [-1, 1].
  auto mapped = [&](const DenseMatrix& W) -> DenseMatrix { return scale * delta(W) - shift * W; };
  DenseMatrix prev = V;
  DenseMatrix y = s.coeffs.empty() ? DenseMatrix(0.0 * V) : DenseMatrix(s.coeffs[0] * V);
  if (deg == 0) return y;
  DenseMatrix cur = mapped(V);
  y += s.coeffs[1] * cur;
  for (int j = 2; j <= deg; ++j) {
    DenseMatrix next = 2.0 * mapped(cur) - prev;
    y += s.coeffs[j] * next;
    prev = std::move(cur);
    cur = std::move(next);
  }
  return y;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start).count();
    start = now;
    return s;
  }
};

const char* mode_name(PolyEvalMode m) {
  switch (m) {
    case PolyEvalMode::Monomial: return "monomial";
    case PolyEvalMode::Chebyshev: return "chebyshev";
    default: return "auto";
  }
}

const char* regularize_name(RegularizeMode m) {
  switch (m) {
    case RegularizeMode::On: return "on";
    case RegularizeMode::Off: return "off";
    default: return "auto";
  }
}

BetaEstimate assemble_beta(double sigma, double residual, double epsilon) {
  BetaEstimate be;
  be.sigma_kplus1_B = sigma;
  be.proj_residual_norm = residual;
  be.beta = (1.0 + epsilon / 2.0) * std::max(sigma, residual);
  return be;
}

}  // namespace

void OpNormRRRConfig::validate() const {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 0.5)) throw InvalidArgument("epsilon must lie in (0, 1/2]");
  if (degree_cap < 1) throw InvalidArgument("degree_cap must be >= 1");
  if (retry_budget < 1) throw InvalidArgument("retry_budget must be >= 1");
}

double estimate_projection_residual(const ProjectionContext& ctx, const MatVecOracle& B,
                                    double epsilon, std::uint64_t seed) {
  const double eps_reg = regression_eps((epsilon / 16.0) * (epsilon / 16.0));
  const MatVecOracle op = residual_of_projection(ctx, B, eps_reg);
  return estimate_spectral_norm(op, norm_steps(op, kNormSteps), seed);
}

BetaEstimate estimate_beta(const ProjectionContext& ctx, const MatVecOracle& B, Index k,
                           double epsilon, std::uint64_t seed) {
  const double sigma = estimate_sigma_kplus1(B, k, epsilon / 8.0, derive_seed(seed, kSeedSigma));
  const double residual =
      estimate_projection_residual(ctx, B, epsilon, derive_seed(seed, kSeedResidual));
  return assemble_beta(sigma, residual, epsilon);
}

BetaEstimate estimate_beta(const SparseMatrix& A, const Preconditioner& P, const SparseMatrix& B,
                           Index k, double epsilon, std::uint64_t seed) {
  if (A.rows() != B.rows()) throw DimensionError("A and B must have the same number of rows");
  ProjectionContext ctx{std::make_shared<const SparseMatrix>(A),
                        std::make_shared<const Preconditioner>(P)};
  return estimate_beta(ctx, make_oracle(B), k, epsilon, seed);
}

BlockMap make_delta_oracle(const ProjectionContext& ctx, const MatVecOracle& B, double beta,
                           double eps_reg) {
  const double inv_beta2 = 1.0 / (beta * beta);
  return [ctx, B, inv_beta2, eps_reg](const DenseMatrix& V) -> DenseMatrix {
    const DenseMatrix bv = B.apply(V, 0.0);
    const DenseMatrix residual = bv - approx_projection_multi(*ctx.A, *ctx.P, bv, eps_reg);
    return inv_beta2 * B.apply_transpose(residual, 0.0);
  };
}

PolyEvalMode MPrimeContext::resolved_mode() const {
  if (!r.chebyshev()) return PolyEvalMode::Monomial;
  if (mode == PolyEvalMode::Auto)
    return r.l1_norm() > kMonomialModeLimit ? PolyEvalMode::Chebyshev : PolyEvalMode::Monomial;
  return mode;
}

DenseMatrix oracle_Mprime(const MPrimeContext& ctx, const DenseMatrix& V, double eps_f) {
  if (V.rows() != ctx.B.cols) throw DimensionError("oracle_Mprime: operand has wrong row count");
  const double eps_r = eps_f * ctx.epsilon / ctx.kappa_hat;
  const double eps_final = eps_f * std::pow(ctx.epsilon, 1.5);
  const DenseMatrix y = apply_polynomial(ctx, V, eps_r);
  return approx_projection_multi(*ctx.proj.A, *ctx.proj.P, ctx.B.apply(y, 0.0),
                                 regression_eps(eps_final)) /
         ctx.beta;
}

DenseMatrix oracle_MprimeT(const MPrimeContext& ctx, const DenseMatrix& V, double eps_f) {
  if (V.rows() != ctx.B.rows) throw DimensionError("oracle_MprimeT: operand has wrong row count");
  const double eps_r = eps_f * ctx.epsilon / ctx.kappa_hat;
  const double eps_first = eps_f * std::pow(ctx.epsilon, 1.5) / ctx.kappa_hat;
  const DenseMatrix apx0 = ctx.B.apply_transpose(
      approx_projection_multi(*ctx.proj.A, *ctx.proj.P, V, regression_eps(eps_first)), 0.0);
  return apply_polynomial(ctx, apx0, eps_r) / ctx.beta;
}

MatVecOracle make_mprime_oracle(std::shared_ptr<const MPrimeContext> ctx) {
  MatVecOracle o;
  o.rows = ctx->B.rows;
  o.cols = ctx->B.cols;
  o.apply = [ctx](const DenseMatrix& v, double eps) { return oracle_Mprime(*ctx, v, eps); };
  o.apply_transpose = [ctx](const DenseMatrix& v, double eps) {
    return oracle_MprimeT(*ctx, v, eps);
  };
  return o;
}

RegularizedB regularize_B(const SparseMatrix& B, Index n, Index d, Index k, double sigma_kplus1_B,
                          double epsilon, std::uint64_t seed, Index rank_A) {
  if (B.rows() != n || B.cols() != d) throw DimensionError("regularize_B: B is not n x d");
  if (rank_A < k + 1)
    throw PreconditionError("regularization needs rank(A) >= k+1 (found rank " +
                            std::to_string(rank_A) + "); disable regularization");
  if (d < k + 1) throw PreconditionError("regularization needs d >= k+1; disable regularization");
  RegularizedB out;
  out.alpha = epsilon * sigma_kplus1_B / (6.0 * std::sqrt(static_cast<double>(n)));
  out.G = gaussian_matrix(n, k + 1, derive_seed(seed, 1));
  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 gen(derive_seed(seed, 2));
  std::shuffle(perm.begin(), perm.end(), gen);
  out.columns.assign(perm.begin(), perm.begin() + (k + 1));

  auto shared_b = std::make_shared<const SparseMatrix>(B);
  const double alpha = out.alpha;
  const DenseMatrix G = out.G;
  const std::vector<Index> cols = out.columns;
  out.oracle.rows = n;
  out.oracle.cols = d;
  out.oracle.apply = [shared_b, alpha, G, cols](const DenseMatrix& v, double) -> DenseMatrix {
    DenseMatrix y = multiply(*shared_b, v);
    if (alpha == 0.0) return y;
    DenseMatrix picked(static_cast<Index>(cols.size()), v.cols());
    for (std::size_t i = 0; i < cols.size(); ++i) picked.row(i) = v.row(cols[i]);
    y += alpha * (G * picked);
    return y;
  };
  out.oracle.apply_transpose = [shared_b, alpha, G, cols](const DenseMatrix& u,
                                                          double) -> DenseMatrix {
    DenseMatrix y = multiply_transpose(*shared_b, u);
    if (alpha == 0.0) return y;
    const DenseMatrix gu = alpha * (G.transpose() * u);
    for (std::size_t i = 0; i < cols.size(); ++i) y.row(cols[i]) += gu.row(i);
    return y;
  };
  return out;
}

double estimate_cost(const SparseMatrix& A, const SparseMatrix& B, const DenseMatrix& X_left,
                     const DenseMatrix& X_right, int steps, std::uint64_t seed) {
  MatVecOracle op;
  op.rows = B.rows();
  op.cols = B.cols();
  op.apply = [&](const DenseMatrix& v, double) -> DenseMatrix {
    return multiply(A, X_left * (X_right * v)) - multiply(B, v);
  };
  op.apply_transpose = [&](const DenseMatrix& u, double) -> DenseMatrix {
    return X_right.transpose() * (X_left.transpose() * multiply_transpose(A, u)) -
           multiply_transpose(B, u);
  };
  return estimate_spectral_norm(op, norm_steps(op, steps), seed);
}

RRRSolution solve_rrr(const SparseMatrix& A, const SparseMatrix& B, const OpNormRRRConfig& config) {
  config.validate();
  const Index n = A.rows();
  const Index c = A.cols();
  const Index d = B.cols();
  const Index k = config.k;
  const double eps = config.epsilon;
  if (B.rows() != n)
    throw DimensionError("A has " + std::to_string(n) + " rows but B has " +
                         std::to_string(B.rows()));
  if (n < c) throw DimensionError("need n >= c");
  if (k > c || k > d) throw InvalidArgument("k must not exceed min(c, d)");

  Stopwatch watch;
  nlohmann::json diag;
  nlohmann::json timing;
  nlohmann::json seeds;
  seeds["base"] = config.seed;

  RRRSolution sol;
  auto A_ptr = std::make_shared<const SparseMatrix>(A);
  const std::uint64_t pre_seed = derive_seed(config.seed, kSeedPreconditioner);
  seeds["preconditioner"] = pre_seed;
  auto P_ptr = std::make_shared<const Preconditioner>(build_preconditioner(A, pre_seed));
  const Preconditioner& P = *P_ptr;
  diag["preconditioner"] = {{"sketch_rows", P.sketch_rows}, {"exact", P.exact},
                            {"rank_estimate", P.rank_estimate}, {"condition", P.condition()},
                            {"attempts", P.attempts}, {"seed", P.seed}};
  timing["preconditioner"] = watch.lap();

  ProjectionContext proj{A_ptr, P_ptr};
  const MatVecOracle B_exact = make_oracle(B);
  const double guard_eps = regression_eps((eps / 16.0) * (eps / 16.0));
  const std::uint64_t norm_seed = derive_seed(config.seed, kSeedNorms);
  seeds["norms"] = norm_seed;
  const double norm_B = estimate_spectral_norm(B_exact, norm_steps(B_exact, kNormSteps), norm_seed);
  const MatVecOracle proj_B = projected_oracle(proj, B_exact, guard_eps);
  const double norm_proj_B = estimate_spectral_norm(proj_B, norm_steps(proj_B, kNormSteps), norm_seed);
  diag["norm_B"] = norm_B;
  diag["norm_AApB"] = norm_proj_B;
  timing["norms"] = watch.lap();

  auto finish = [&](RRRSolution&& s) {
    diag["seeds"] = seeds;
    diag["wall_clock"] = timing;
    diag["config"] = {{"k", k}, {"epsilon", eps}, {"seed", config.seed},
                      {"degree_cap", config.degree_cap},
                      {"regularize", regularize_name(config.regularize)},
                      {"retry_budget", config.retry_budget},
                      {"poly_mode", mode_name(config.poly_mode)}};
    s.diagnostics = diag;
    return std::move(s);
  };

  if (norm_B == 0.0 || norm_proj_B <= eps * norm_B) {
    diag["degenerate"] = true;
    sol.Z = DenseMatrix(n, 0);
    sol.X_left = DenseMatrix::Zero(c, k);
    sol.X_right = DenseMatrix::Zero(k, d);
    sol.cost_estimate = norm_B;
    return finish(std::move(sol));
  }
  diag["degenerate"] = false;

  // Regularization and beta.
  const std::uint64_t sigma_seed = derive_seed(config.seed, kSeedSigma);
  seeds["sigma"] = sigma_seed;
  const double sigma_B = estimate_sigma_kplus1(B_exact, k, eps / 8.0, sigma_seed);
  bool regularized = config.regularize == RegularizeMode::On;
  if (config.regularize == RegularizeMode::Auto)
    regularized = config.trusted_kappa <= 0.0 && P.rank_estimate >= k + 1 && d >= k + 1;
  MatVecOracle B_op = B_exact;
  double sigma_used = sigma_B;
  if (regularized) {
    const std::uint64_t reg_seed = derive_seed(config.seed, kSeedRegularize);
    seeds["regularize"] = reg_seed;
    RegularizedB reg = regularize_B(B, n, d, k, sigma_B, eps, reg_seed, P.rank_estimate);
    B_op = reg.oracle;
    diag["regularization"] = {{"alpha", reg.alpha}, {"columns", reg.columns}};
    if (reg.alpha > 0.0) {
      const std::uint64_t s2 = derive_seed(config.seed, kSeedSigmaTilde);
      seeds["sigma_regularized"] = s2;
      sigma_used = estimate_sigma_kplus1(B_op, k, eps / 8.0, s2);
    }
  }
  diag["regularized"] = regularized;
  const std::uint64_t res_seed = derive_seed(config.seed, kSeedResidual);
  seeds["residual"] = res_seed;
  const BetaEstimate be =
      assemble_beta(sigma_used, estimate_projection_residual(proj, B_op, eps, res_seed), eps);
  sol.beta = be.beta;
  diag["beta"] = {{"beta", be.beta}, {"sigma_kplus1_B", be.sigma_kplus1_B},
                  {"proj_residual_norm", be.proj_residual_norm}};
  const double top = estimate_top_singular(B_op, kTopSingularIterations, norm_seed);
  const double kappa_hat =
      be.sigma_kplus1_B > 0.0 ? std::clamp(2.0 * top / be.sigma_kplus1_B, 1.0, kKappaCap) : kKappaCap;
  const double kappa_aab =
      config.trusted_kappa > 0.0 && !regularized ? config.trusted_kappa
                                                 : 10.0 * static_cast<double>(n) / eps * kappa_hat;
  const double kappa_mprime = 4.0 / std::sqrt(eps) * kappa_aab;
  diag["kappa_hat"] = kappa_hat;
  diag["kappa_mprime"] = kappa_mprime;
  timing["beta"] = watch.lap();

  // Operator whose rank-k approximation is sought.
  MatVecOracle M;
  const bool exact_rank = be.beta <= 1e-12 * norm_B;
  diag["zero_optimum"] = exact_rank;
  if (exact_rank) {
    M = projected_oracle(proj, B_op, guard_eps);
  } else {
    const double x_upper = std::pow((1.0 + eps / 8.0) * be.proj_residual_norm / be.beta, 2);
    const double eps_poly = x_upper > 0.0 ? std::min(1.0, 1.0 / x_upper - 1.0) : 1.0;
    const double delta = eps / (4.0 * kappa_hat);
    CertifiedPolynomial r = build_r(eps_poly, delta);
    nlohmann::json poly;
    poly["interval_epsilon"] = eps_poly;
    poly["delta"] = delta;
    poly["taylor_terms"] = r.taylor_terms;
    poly["reduced_degree"] = r.poly.degree();
    if (r.poly.degree() > config.degree_cap) {
      const CertifiedPolynomial half = build_r(eps_poly, delta / 2.0);
      r = economize(half, delta, config.degree_cap);
      poly["economized"] = true;
    } else {
      poly["economized"] = false;
    }
    auto ctx = std::make_shared<MPrimeContext>();
    ctx->proj = proj;
    ctx->B = B_op;
    ctx->r = r.poly;
    ctx->beta = be.beta;
    ctx->kappa_hat = kappa_hat;
    ctx->epsilon = eps;
    ctx->mode = config.poly_mode;
    poly["degree"] = r.poly.degree();
    poly["l1_norm"] = r.poly.l1_norm();
    poly["sup_error"] = r.sup_error;
    poly["eval_mode"] = mode_name(ctx->resolved_mode());
    diag["polynomial"] = poly;
    M = make_mprime_oracle(ctx);
  }
  timing["polynomial"] = watch.lap();

  KrylovParams params = make_krylov_params(k, eps / 2.0, kappa_mprime, d,
                                           derive_seed(config.seed, kSeedKrylov),
                                           config.accuracy_form);
  seeds["krylov"] = params.seed;
  const double target = (1.0 + eps) * be.beta / (1.0 + eps / 2.0);
  nlohmann::json attempts = nlohmann::json::array();
  bool have = false;
  double krylov_time = 0.0, finish_time = 0.0;
  for (int a = 0; a < config.retry_budget; ++a) {
    KrylovParams p = params;
    if (a > 0) p.seed = derive_seed(params.seed, static_cast<std::uint64_t>(a));
    LRAResult lra;
    try {
      lra = noisy_block_krylov(M, p);
    } catch (const KrylovRankError& e) {
      // The operator has rank below k: its whole range is the best subspace.
      if (e.rank() == 0) throw Error("the regression operator vanished numerically");
      p.k = e.rank();
      lra = noisy_block_krylov(M, p);
      diag["effective_rank"] = e.rank();
    }
    krylov_time += watch.lap();
    RRRSolution cand;
    cand.Z = lra.Z;
    cand.X_left = solve_multi(A, P, cand.Z, 0.5);
    cand.X_right = multiply_transpose(B, cand.Z).transpose();
    const std::uint64_t cost_seed = derive_seed(config.seed, kSeedCost);
    seeds["cost"] = cost_seed;
    cand.cost_estimate = estimate_cost(A, B, cand.X_left, cand.X_right, kCostSteps, cost_seed);
    cand.beta = be.beta;
    finish_time += watch.lap();
    nlohmann::json record = lra.diagnostics.to_json();
    record["krylov_dim"] = lra.krylov_dim;
    record["sigma_kplus1_ritz"] = lra.sigma_kplus1_estimate;
    record["cost_estimate"] = cand.cost_estimate;
    record["seed"] = p.seed;
    attempts.push_back(record);
    if (!have || cand.cost_estimate < sol.cost_estimate) {
      sol = std::move(cand);
      have = true;
    }
    if (sol.cost_estimate <= target) break;
  }
  diag["krylov_attempts"] = attempts;
  diag["retries"] = static_cast<int>(attempts.size()) - 1;
  diag["q"] = params.q;
  diag["cost_steps"] = kCostSteps;
  diag["cost_target"] = target;
  diag["best_effort"] = sol.cost_estimate > target;
  timing["krylov"] = krylov_time;
  timing["factors_and_cost"] = finish_time;
  return finish(std::move(sol));
}

}  // namespace rrr
