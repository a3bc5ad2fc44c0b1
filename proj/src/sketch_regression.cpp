#include "opnorm_rrr/sketch_regression.hpp"

#include "opnorm_rrr/dense_ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace rrr {

namespace {

constexpr double kAccuracyFloor = 1e-13;

// Plain loops keep the summation order independent of memory alignment, so a
// column solved alone matches the same column solved inside a block.
double dot(const double* a, const double* b, Index n) {
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

DenseMatrix count_sketch(const SparseMatrix& A, Index m, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<Index> bucket(0, m - 1);
  DenseMatrix sa = DenseMatrix::Zero(m, A.cols());
  const auto& off = A.row_offsets();
  for (Index i = 0; i < A.rows(); ++i) {
    const Index h = bucket(gen);
    const double sign = (gen() & 1U) ? 1.0 : -1.0;
    for (Index p = off[i]; p < off[i + 1]; ++p) sa(h, A.col_indices()[p]) += sign * A.values()[p];
  }
  return sa;
}

struct Candidate {
  Preconditioner P;
  bool missed_columns = false;
};

Candidate factor(const SparseMatrix& A, const DenseMatrix& gram_a, const DenseMatrix& sa) {
  const Index c = A.cols();
  Candidate out;
  Preconditioner& P = out.P;
  P.n = A.rows();
  P.c = c;
  Eigen::ColPivHouseholderQR<DenseMatrix> qr(sa);
  const DenseMatrix r_full = qr.matrixR().topRows(std::min(sa.rows(), c));
  P.r_factor = DenseMatrix::Zero(c, c);
  P.r_factor.topRows(r_full.rows()) = r_full.template triangularView<Eigen::Upper>();
  const auto& perm = qr.colsPermutation().indices();
  P.pivots.assign(perm.data(), perm.data() + perm.size());

  const double r00 = r_full.rows() > 0 ? std::abs(r_full(0, 0)) : 0.0;
  const double tol = static_cast<double>(std::max(sa.rows(), c)) *
                     std::numeric_limits<double>::epsilon() * r00;
  Index rank = 0;
  while (rank < r_full.rows() && std::abs(r_full(rank, rank)) > tol && r00 > 0.0) ++rank;
  P.rank_estimate = rank;
  if (rank == 0) {
    P.sigma_min = P.sigma_max = 1.0;
    return out;
  }

  const auto R = P.r_factor.topLeftCorner(rank, rank).triangularView<Eigen::Upper>();
  DenseMatrix g_kk(rank, rank);
  for (Index i = 0; i < rank; ++i)
    for (Index j = 0; j < rank; ++j) g_kk(i, j) = gram_a(P.pivots[i], P.pivots[j]);
  // R^-T G R^-1 is the Gram matrix of the preconditioned columns.
  DenseMatrix left = R.transpose().solve(g_kk);
  DenseMatrix pre_gram = R.transpose().solve(left.transpose());
  const Vector lambda = symmetric_eigen(0.5 * (pre_gram + pre_gram.transpose())).values;
  P.sigma_max = std::sqrt(std::max(lambda(0), 0.0));
  P.sigma_min = std::sqrt(std::max(lambda(rank - 1), 0.0));

  // Columns the sketch declared dependent must really lie in the kept range.
  for (Index t = rank; t < c; ++t) {
    const Index col = P.pivots[t];
    const double norm2 = gram_a(col, col);
    if (norm2 == 0.0) continue;
    Vector g_kd(rank);
    for (Index i = 0; i < rank; ++i) g_kd(i) = gram_a(P.pivots[i], col);
    const Vector w = R.transpose().solve(g_kd);
    const double residual2 = norm2 - w.squaredNorm();
    if (residual2 > 1e-12 * norm2) out.missed_columns = true;
  }
  return out;
}

// Preconditioned operator pieces, applied one column at a time.
void apply_rinv(const Preconditioner& P, const double* y, double* x_full) {
  const Index r = P.rank_estimate;
  Vector z = Eigen::Map<const Vector>(y, r);
  P.r_factor.topLeftCorner(r, r).triangularView<Eigen::Upper>().solveInPlace(z);
  std::fill(x_full, x_full + P.c, 0.0);
  for (Index i = 0; i < r; ++i) x_full[P.pivots[i]] = z(i);
}

void apply_rinv_transpose(const Preconditioner& P, const double* w_full, double* y) {
  const Index r = P.rank_estimate;
  Vector z(r);
  for (Index i = 0; i < r; ++i) z(i) = w_full[P.pivots[i]];
  P.r_factor.topLeftCorner(r, r).triangularView<Eigen::Upper>().transpose().solveInPlace(z);
  std::copy(z.data(), z.data() + r, y);
}

// A R^-1 on the columns of y (r x w).
DenseMatrix apply_op(const SparseMatrix& A, const Preconditioner& P, const DenseMatrix& y) {
  DenseMatrix x(P.c, y.cols());
  for (Index j = 0; j < y.cols(); ++j) apply_rinv(P, y.col(j).data(), x.col(j).data());
  return multiply(A, x);
}

DenseMatrix apply_op_transpose(const SparseMatrix& A, const Preconditioner& P,
                               const DenseMatrix& u) {
  const DenseMatrix w = multiply_transpose(A, u);
  DenseMatrix y(P.rank_estimate, u.cols());
  for (Index j = 0; j < u.cols(); ++j) apply_rinv_transpose(P, w.col(j).data(), y.col(j).data());
  return y;
}

struct CglsOutcome {
  DenseMatrix x;
  int iterations = 0;
  Index failed_column = -1;
  double failed_residual = 0.0;
  std::vector<std::vector<double>> history;
};

CglsOutcome cgls(const SparseMatrix& A, const Preconditioner& P, const DenseMatrix& rhs,
                 double eps_reg) {
  const Index n = A.rows();
  const Index r = P.rank_estimate;
  const Index w = rhs.cols();
  CglsOutcome out;
  out.x = DenseMatrix::Zero(P.c, w);
  out.history.assign(static_cast<std::size_t>(w), {});
  if (r == 0) return out;

  const double accuracy = std::sqrt(eps_reg);
  const double sigma_min = 0.99 * P.sigma_min;
  const int cap = iteration_cap();

  DenseMatrix y = DenseMatrix::Zero(r, w);
  DenseMatrix res = rhs;
  std::vector<double> b_norm(w), gamma(w);
  std::vector<char> active(w, 1);
  DenseMatrix s = apply_op_transpose(A, P, res);
  DenseMatrix p = s;
  for (Index j = 0; j < w; ++j) {
    b_norm[j] = std::sqrt(dot(rhs.col(j).data(), rhs.col(j).data(), n));
    gamma[j] = dot(s.col(j).data(), s.col(j).data(), r);
    out.history[j].push_back(b_norm[j]);
  }

  auto converged = [&](Index j) {
    const double res_norm2 = dot(res.col(j).data(), res.col(j).data(), n);
    const double err = std::sqrt(gamma[j]) / sigma_min;
    const double optimal2 = std::max(res_norm2 - err * err, 0.0);
    return err <= accuracy * std::sqrt(optimal2) || err <= kAccuracyFloor * b_norm[j];
  };

  std::vector<Index> live;
  for (Index j = 0; j < w; ++j) {
    if (b_norm[j] == 0.0 || converged(j)) active[j] = 0;
  }
  for (int it = 1;; ++it) {
    live.clear();
    for (Index j = 0; j < w; ++j)
      if (active[j]) live.push_back(j);
    if (live.empty()) break;
    if (it > cap) {
      const Index j = live.front();
      out.failed_column = j;
      out.failed_residual = std::sqrt(gamma[j]) / sigma_min;
      break;
    }
    out.iterations = it;
    DenseMatrix p_live(r, static_cast<Index>(live.size()));
    for (std::size_t t = 0; t < live.size(); ++t) p_live.col(t) = p.col(live[t]);
    const DenseMatrix q = apply_op(A, P, p_live);
    DenseMatrix r_live(n, static_cast<Index>(live.size()));
    for (std::size_t t = 0; t < live.size(); ++t) {
      const Index j = live[t];
      const double qq = dot(q.col(t).data(), q.col(t).data(), n);
      const double alpha = qq > 0.0 ? gamma[j] / qq : 0.0;
      y.col(j) += alpha * p.col(j);
      res.col(j) -= alpha * q.col(t);
      r_live.col(t) = res.col(j);
      out.history[j].push_back(std::sqrt(dot(res.col(j).data(), res.col(j).data(), n)));
    }
    const DenseMatrix s_live = apply_op_transpose(A, P, r_live);
    for (std::size_t t = 0; t < live.size(); ++t) {
      const Index j = live[t];
      const double gamma_new = dot(s_live.col(t).data(), s_live.col(t).data(), r);
      const double beta = gamma[j] > 0.0 ? gamma_new / gamma[j] : 0.0;
      gamma[j] = gamma_new;
      p.col(j) = s_live.col(t) + beta * p.col(j);
      if (gamma_new == 0.0 || converged(j)) active[j] = 0;
    }
  }
  for (Index j = 0; j < w; ++j) apply_rinv(P, y.col(j).data(), out.x.col(j).data());
  return out;
}

void check_solve_args(const SparseMatrix& A, const Preconditioner& P, Index rhs_rows,
                      double eps_reg) {
  if (P.n != A.rows() || P.c != A.cols())
    throw DimensionError("preconditioner was built for a different matrix");
  if (rhs_rows != A.rows())
    throw DimensionError("right-hand side has " + std::to_string(rhs_rows) +
                         " rows, expected " + std::to_string(A.rows()));
  if (!(eps_reg > 0.0 && eps_reg < 1.0)) throw InvalidArgument("eps_reg must lie in (0, 1)");
}

}  // namespace

Index default_sketch_rows(Index c) {
  const double cd = static_cast<double>(c);
  const Index clamped = std::min<Index>(c * c, static_cast<Index>(std::ceil(8.0 * cd * std::log(cd))));
  return std::max<Index>(20 * c, clamped);
}

Preconditioner build_preconditioner(const SparseMatrix& A, std::uint64_t seed,
                                    const PreconditionerOptions& options) {
  const Index n = A.rows();
  const Index c = A.cols();
  if (c < 1 || n < c) throw DimensionError("build_preconditioner: need n >= c >= 1");
  const DenseMatrix gram_a = gram(A);
  Index m = options.sketch_rows > 0 ? options.sketch_rows : default_sketch_rows(c);
  const int attempts = std::max(options.max_attempts, 1);

  Candidate best;
  bool have_best = false;
  for (int t = 0; t < attempts; ++t) {
    const std::uint64_t s = t == 0 ? seed : derive_seed(seed, static_cast<std::uint64_t>(t));
    const bool exact = m >= n || t == attempts - 1;
    Candidate cand = factor(A, gram_a, exact ? A.to_dense() : count_sketch(A, m, s));
    cand.P.exact = exact;
    cand.P.sketch_rows = exact ? n : m;
    cand.P.seed = s;
    cand.P.attempts = t + 1;
    const bool ok = !cand.missed_columns && cand.P.sigma_min > 0.0 &&
                    cand.P.condition() <= options.max_condition;
    if (ok || exact) return cand.P;
    if (!have_best || (!cand.missed_columns && cand.P.condition() < best.P.condition())) {
      best = std::move(cand);
      have_best = true;
    }
    m *= 2;
  }
  return best.P;
}

int iteration_cap() {
  // Sized for the absolute floor, which binds whenever b is nearly in range.
  return 20 + static_cast<int>(std::ceil(8.0 * std::log10(1.0 / kAccuracyFloor)));
}

DenseMatrix solve_multi(const SparseMatrix& A, const Preconditioner& P, const DenseMatrix& rhs,
                        double eps_reg, SolveStats* stats) {
  check_solve_args(A, P, rhs.rows(), eps_reg);
  CglsOutcome outcome = cgls(A, P, rhs, eps_reg);
  bool rebuilt = false;
  if (outcome.failed_column >= 0) {
    PreconditionerOptions options;
    options.sketch_rows = 2 * P.sketch_rows;
    const Preconditioner fresh = build_preconditioner(A, derive_seed(P.seed, 0x5eed), options);
    outcome = cgls(A, fresh, rhs, eps_reg);
    rebuilt = true;
  }
  if (stats) {
    stats->iterations = outcome.iterations;
    stats->rebuilt = rebuilt;
    stats->residual_history = std::move(outcome.history);
  }
  if (outcome.failed_column >= 0)
    throw ConvergenceError("regression did not converge for column " +
                               std::to_string(outcome.failed_column) + " within " +
                               std::to_string(iteration_cap()) + " iterations",
                           outcome.failed_residual);
  return outcome.x;
}

Vector solve(const SparseMatrix& A, const Preconditioner& P, const Vector& b, double eps_reg,
             SolveStats* stats) {
  return solve_multi(A, P, b, eps_reg, stats).col(0);
}

DenseMatrix approx_projection_multi(const SparseMatrix& A, const Preconditioner& P,
                                    const DenseMatrix& rhs, double eps_reg) {
  return multiply(A, solve_multi(A, P, rhs, eps_reg));
}

Vector approx_projection(const SparseMatrix& A, const Preconditioner& P, const Vector& b,
                         double eps_reg) {
  return approx_projection_multi(A, P, b, eps_reg).col(0);
}

}  // namespace rrr
