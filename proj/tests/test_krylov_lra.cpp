#include <doctest.h>

#include "opnorm_rrr/dense_ops.hpp"
#include "opnorm_rrr/krylov_lra.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace rrr;

namespace {

DenseMatrix diag_matrix(std::initializer_list<double> d) {
  Vector v(static_cast<Index>(d.size()));
  Index i = 0;
  for (double x : d) v(i++) = x;
  return v.asDiagonal();
}

double residual_norm(const DenseMatrix& M, const DenseMatrix& Z) {
  return oracle::norm2(M - Z * (Z.transpose() * M));
}

// T_q through the trigonometric / hyperbolic closed forms.
double chebyshev_closed(int q, double x) {
  if (std::abs(x) <= 1.0) return std::cos(q * std::acos(x));
  const double v = std::cosh(q * std::acosh(std::abs(x)));
  return (x < 0.0 && q % 2 == 1) ? -v : v;
}

// Random n×d matrix with sigma_1 / sigma_{k+1} = kappa and sigma_{k+1} = 1.
DenseMatrix with_kappa(Index n, Index d, Index k, double kappa, std::uint64_t seed) {
  const Index m = std::min(n, d);
  Vector s(m);
  for (Index i = 0; i < m; ++i) {
    if (i <= k) s(i) = kappa - (kappa - 1.0) * static_cast<double>(i) / std::max<Index>(k, 1);
    else s(i) = 1.0 / (1.0 + static_cast<double>(i - k));
  }
  return oracle::with_singular_values(n, d, s, seed);
}

}  // namespace

TEST_CASE("noisy block Krylov on diag(5,1,1,0.01)") {
  const DenseMatrix M = diag_matrix({5, 1, 1, 0.01});
  KrylovParams p = make_krylov_params(1, 0.25, 5.0, 4, 3);
  const LRAResult r = noisy_block_krylov(make_oracle(M), p);
  CHECK(r.Z.cols() == 1);
  CHECK(residual_norm(M, r.Z) <= 1.25);
  CHECK(r.diagnostics.orthogonality_defect <= 1e-8);
}

TEST_CASE("exactly rank-k input leaves no residual") {
  const DenseMatrix M = oracle::random_gaussian(40, 3, 1) * oracle::random_gaussian(3, 30, 2);
  const LRAResult r = noisy_block_krylov(make_oracle(M), make_krylov_params(3, 0.1, 10.0, 30, 5));
  CHECK(residual_norm(M, r.Z) <= 1e-6 * oracle::norm2(M));
}

TEST_CASE("noisy block Krylov on 200x100 with injected oracle noise") {
  const double eps = 0.2;
  for (Index k : {1, 5, 10}) {
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const DenseMatrix M = oracle::random_gaussian(200, 100, 100 * k + seed);
      const Vector s = oracle::svals(M);
      const KrylovParams p = make_krylov_params(k, eps, s(0) / s(k), 100, seed);
      const LRAResult r = noisy_block_krylov(oracle::noisy_oracle(M, seed), p);
      CHECK(oracle::norm2(r.Z.transpose() * r.Z - DenseMatrix::Identity(k, k)) <= 1e-8);
      if (residual_norm(M, r.Z) <= (1.0 + eps) * s(k)) ++ok;
    }
    CHECK(ok == 20);
  }
}

TEST_CASE("noisy block Krylov tolerates noise well above machine precision") {
  const DenseMatrix M = with_kappa(120, 80, 4, 5.0, 9);
  KrylovParams p = make_krylov_params(4, 0.2, 5.0, 80, 9);
  p.eps_circ = 1e-8;
  p.eps_bullet = 1e-6;
  const LRAResult r = noisy_block_krylov(oracle::noisy_oracle(M, 10), p);
  CHECK(residual_norm(M, r.Z) <= 1.2 * oracle::sigma(M, 4));
  // psd fix of the symmetrized Gram moves it by at most 3 eps ||M||^2 sqrt(t).
  CHECK(r.diagnostics.psd_correction <=
        3.0 * p.eps_bullet * std::pow(oracle::norm2(M), 2) * std::sqrt(double(r.krylov_dim)));
}

TEST_CASE("Z lies in the column span of M") {
  DenseMatrix M = DenseMatrix::Zero(30, 20);
  M.leftCols(6) = oracle::random_gaussian(30, 6, 4);
  M = M * oracle::random_orthonormal(20, 20, 5).transpose();
  const LRAResult r = exact_block_krylov(M, 3, 0.1, 6);
  const DenseMatrix P = oracle::projector(M);
  CHECK((r.Z - P * r.Z).norm() <= 1e-10);
}

TEST_CASE("rank-deficient Krylov block raises KrylovRankError") {
  DenseMatrix M = DenseMatrix::Zero(10, 8);
  M(0, 0) = 2.0;
  M(1, 1) = 1.0;
  try {
    exact_block_krylov(M, 3, 0.1, 1);
    FAIL("expected KrylovRankError");
  } catch (const KrylovRankError& e) {
    CHECK(e.rank() == 2);
  }
  CHECK_THROWS_AS(exact_block_krylov(M, 9, 0.1, 1), DimensionError);
}

TEST_CASE("exact block Krylov examples") {
  const DenseMatrix M = diag_matrix({3, 2, 1});
  CHECK(residual_norm(M, exact_block_krylov(M, 2, 0.1, 1).Z) <= 1.1);

  const DenseMatrix Q = oracle::random_orthonormal(30, 6, 2);
  CHECK(residual_norm(Q, exact_block_krylov(Q, 6, 0.1, 2).Z) <= 1e-12);

  const DenseMatrix A = oracle::random_gaussian(100, 60, 3);
  const LRAResult r = exact_block_krylov(A, 10, 0.1, 3);
  const Vector s = oracle::svals(A);
  const double best_f = s.tail(s.size() - 10).norm();
  CHECK((A - r.Z * (r.Z.transpose() * A)).norm() <= 1.1 * best_f);
  CHECK(residual_norm(A, r.Z) <= 1.1 * s(10));

  const LRAResult sp = exact_block_krylov(SparseMatrix::from_dense(M), 2, 0.1, 1);
  CHECK(residual_norm(M, sp.Z) <= 1.1);
}

TEST_CASE("estimate_top_singular examples") {
  const double d = estimate_top_singular(make_oracle(diag_matrix({4, 1})), 50, 1);
  CHECK(d >= 3.9);
  CHECK(d <= 4.0 + 1e-12);
  CHECK(estimate_top_singular(make_oracle(DenseMatrix(DenseMatrix::Zero(3, 3))), 5, 1) == 0.0);
  Vector u(3), v(4);
  u.setConstant(2.0 / std::sqrt(3.0));
  v << 0.5, 0.5, 0.5, 0.5;
  const DenseMatrix R = u * v.transpose();
  CHECK(std::abs(estimate_top_singular(make_oracle(R), 2, 7) - 2.0) <= 1e-10);
  CHECK_THROWS_AS(estimate_top_singular(make_oracle(R), 0, 7), InvalidArgument);
}

TEST_CASE("estimate_top_singular never exceeds the true norm") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DenseMatrix M = oracle::random_gaussian(30, 20, seed);
    for (int it : {1, 3, 10}) CHECK(estimate_top_singular(make_oracle(M), it, seed) <=
                                    oracle::norm2(M) * (1.0 + 1e-12));
  }
}

TEST_CASE("estimate_spectral_norm is exact once steps reach the rank") {
  const DenseMatrix M = oracle::random_gaussian(25, 12, 4);
  CHECK(estimate_spectral_norm(make_oracle(M), 12, 1) == doctest::Approx(oracle::norm2(M)).epsilon(1e-12));
}

TEST_CASE("estimate_sigma_kplus1 examples") {
  const double a = estimate_sigma_kplus1(diag_matrix({3, 2, 1}), 2, 0.1, 1);
  CHECK(a >= 1.0 - 1e-12);
  CHECK(a <= 1.1);

  const DenseMatrix L = oracle::random_gaussian(30, 2, 5) * oracle::random_gaussian(2, 25, 6);
  CHECK(estimate_sigma_kplus1(L, 2, 0.1, 2) <= 1e-8 * oracle::norm2(L));

  const DenseMatrix R = oracle::random_gaussian(100, 80, 7);
  const double s6 = oracle::sigma(R, 5);
  const double e = estimate_sigma_kplus1(R, 5, 0.1, 3);
  CHECK(e >= s6 * (1.0 - 1e-10));
  CHECK(e <= 1.1 * s6);
}

TEST_CASE("Krylov error recurrence under worst-case injected noise") {
  const double e = 1e-6;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DenseMatrix M = 3.0 * oracle::random_gaussian(40, 30, seed) / std::sqrt(40.0);
    const double mn = oracle::norm2(M);
    const DenseMatrix G = oracle::random_gaussian(30, 4, seed + 100);
    const std::vector<DenseMatrix> noisy =
        krylov_block_powers(oracle::noisy_oracle(M, seed + 200), G, 5, e);
    REQUIRE(noisy.size() == 3);
    DenseMatrix exact = M * G;
    for (int i = 1, b = 0; i <= 5; i += 2, ++b) {
      if (i > 1) exact = M * (M.transpose() * exact);
      const double err = (exact - noisy[b]).norm();
      CHECK(err <= 8.0 * e * std::pow(2.0, i / 2.0) * std::pow(mn, i) * G.norm());
    }
  }
}

TEST_CASE("condition number of the Chebyshev-filtered matrix") {
  const double gamma = 0.05;
  for (double kappa : {2.0, 5.0, 10.0}) {
    for (int q : {3, 5}) {
      const Index k = 3;
      const DenseMatrix M = with_kappa(30, 20, k, kappa, 11 * q);
      const Vector s = oracle::svals(M);
      const double alpha = s(k);
      Vector ps(s.size());
      for (Index i = 0; i < s.size(); ++i)
        ps(i) = std::abs((1.0 + gamma) * alpha * chebyshev_closed(q, s(i) / alpha) /
                         chebyshev_closed(q, 1.0 + gamma));
      std::sort(ps.data(), ps.data() + ps.size(), std::greater<>());
      CHECK(ps(0) / ps(k) <= std::pow(3.0 * kappa, q));
    }
  }
}

TEST_CASE("projection closeness under small perturbations") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double kappa = 1.0 + static_cast<double>(seed % 5);
    Vector s(6);
    for (Index i = 0; i < 6; ++i) s(i) = kappa - (kappa - 1.0) * i / 5.0;
    const DenseMatrix A = oracle::with_singular_values(40, 6, s, seed);
    const double delta = 1.0 / (2.0 * kappa) * (seed % 2 ? 0.5 : 1.0);
    DenseMatrix D = oracle::random_gaussian(40, 6, seed + 50);
    D *= delta * oracle::norm2(A) / oracle::norm2(D);
    const DenseMatrix B = A + D;
    const double gap = oracle::norm2(oracle::projector(A) - oracle::projector(B));
    CHECK(gap <= 20.0 * delta * std::pow(kappa, 4));
  }
}

TEST_CASE("top eigenvectors of a perturbed small Gram matrix") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DenseMatrix M = oracle::random_gaussian(30, 20, seed);
    const DenseMatrix Q = oracle::random_orthonormal(30, 8, seed + 1);
    const DenseMatrix gram = Q.transpose() * M * M.transpose() * Q;
    DenseMatrix noise = oracle::random_gaussian(8, 8, seed + 2);
    noise = 0.5 * (noise + noise.transpose());
    noise *= (0.01 * seed) * gram.norm() / noise.norm();
    const DenseMatrix Bp = oracle::sym_fn(gram + noise, [](double x) { return std::max(x, 0.0); });
    const DenseMatrix delta = Bp - gram;
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(Bp);
    const DenseMatrix Z = es.eigenvectors().rowwise().reverse();
    const DenseMatrix QtM = Q.transpose() * M;
    Eigen::JacobiSVD<DenseMatrix> svd(QtM, Eigen::ComputeThinU | Eigen::ComputeThinV);
    for (Index m = 1; m <= 4; ++m) {
      const DenseMatrix QZ = Q * Z.leftCols(m);
      const double lhs = (M - QZ * (QZ.transpose() * M)).squaredNorm();
      const DenseMatrix best = svd.matrixU().leftCols(m) * svd.singularValues().head(m).asDiagonal() *
                               svd.matrixV().leftCols(m).transpose();
      const double rhs = (M - Q * best).squaredNorm() + 2.0 * m * delta.norm();
      CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("psd fix of the noisy small Gram matrix") {
  const double e = 1e-5;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const DenseMatrix M = oracle::random_gaussian(50, 35, seed);
    const Index t = 6;
    const DenseMatrix Q = oracle::random_orthonormal(50, t, seed + 3);
    const MatVecOracle noisy = oracle::noisy_oracle(M, seed + 4);
    const DenseMatrix xi = Q.transpose() * noisy.apply(noisy.apply_transpose(Q, e), e);
    const DenseMatrix fixed = psd_project(0.5 * (xi + xi.transpose()));
    const DenseMatrix exact = Q.transpose() * M * M.transpose() * Q;
    CHECK((fixed - exact).norm() <= 6.0 * e * std::pow(oracle::norm2(M), 2) * std::sqrt(double(t)));
  }
}

TEST_CASE("results are deterministic for a fixed seed") {
  const DenseMatrix M = oracle::random_gaussian(60, 40, 8);
  const KrylovParams p = make_krylov_params(4, 0.2, 3.0, 40, 12);
  const LRAResult a = noisy_block_krylov(make_oracle(M), p);
  const LRAResult b = noisy_block_krylov(make_oracle(M), p);
  CHECK(a.Z == b.Z);
  CHECK(a.sigma_kplus1_estimate == b.sigma_kplus1_estimate);
  KrylovParams other = p;
  other.seed = 13;
  CHECK_FALSE(noisy_block_krylov(make_oracle(M), other).Z == a.Z);
}

TEST_CASE("retries keep the best measured candidate") {
  const DenseMatrix M = with_kappa(80, 60, 5, 4.0, 21);
  const KrylovParams p = make_krylov_params(5, 0.1, 4.0, 60, 21);
  const LRAResult r = block_krylov_with_retries(make_oracle(M), p, 3);
  CHECK(r.diagnostics.residual_estimate >= 0.0);
  CHECK(r.diagnostics.retries <= 2);
  CHECK(residual_norm(M, r.Z) <= 1.1 * oracle::sigma(M, 5));
  const nlohmann::json j = r.diagnostics.to_json();
  CHECK(j.contains("residual_estimate"));
  CHECK(j["q"] == p.q);
}

TEST_CASE("parameter validation and defaults") {
  KrylovParams p;
  CHECK_NOTHROW(p.validate());
  p.q = 4;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.q = 3;
  p.epsilon = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.epsilon = 0.1;
  p.eps_circ = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.eps_circ = 1e-10;
  p.kappa = 0.5;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p.kappa = 2.0;
  p.k = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);

  // ceil(ln(d/eps)/sqrt(eps)) rounded up to odd, capped at 25.
  CHECK(default_q(100, 0.25, 25) == 13);
  CHECK(default_q(4, 0.99, 25) == 3);
  CHECK(default_q(100000, 0.01, 25) == 25);
  CHECK(default_q(100000, 0.01, 10) == 9);
  for (Index d : {10, 1000})
    for (double e : {0.05, 0.3}) CHECK(default_q(d, e) % 2 == 1);

  const KrylovParams m = make_krylov_params(5, 0.1, 10.0, 1000, 1);
  CHECK(m.eps_circ == kKrylovAccuracyFloor);
  CHECK(m.eps_bullet >= kKrylovAccuracyFloor);
  CHECK(eps_circ_formula(0.1, 1.0, 1, 1) == doctest::Approx(0.1 / 3.0));
  CHECK(eps_circ_formula(0.1, 2.0, 1, 1, AccuracyForm::TheoremStatement) ==
        doctest::Approx(0.1 / (32.0 * 3.0)));
  CHECK(eps_bullet_formula(0.1, 1.0, 1, 1) == doctest::Approx(0.01 / 48.0));
  CHECK_THROWS_AS(krylov_block_powers(make_oracle(DenseMatrix(DenseMatrix::Identity(2, 2))),
                                      DenseMatrix::Identity(2, 1), 2, 1e-10),
                  InvalidArgument);
}
