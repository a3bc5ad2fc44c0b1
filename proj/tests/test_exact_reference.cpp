#include <doctest.h>

#include "opnorm_rrr/dense_ops.hpp"
#include "opnorm_rrr/exact_reference.hpp"
#include "opnorm_rrr/generators.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <numbers>

using namespace rrr;

namespace {

DenseRRRInstance intro(double gamma = 0.1) {
  const RegressionInstance r = intro_example(gamma);
  return {r.A.to_dense(), r.B.to_dense(), 1};
}

DenseRRRInstance random_instance(Index n, Index c, Index d, Index k, std::uint64_t seed) {
  return {oracle::random_gaussian(n, c, seed), oracle::random_gaussian(n, d, seed + 5000), k};
}

double op_cost(const DenseRRRInstance& inst, const DenseMatrix& X) {
  return oracle::norm2(inst.A * X - inst.B);
}

}  // namespace

TEST_CASE("Frobenius solution on the intro example") {
  const FrobeniusSolution f = frobenius_rrr(intro());
  DenseMatrix expected(2, 2);
  expected << 0, 0, 0, 1.1;
  CHECK((f.X - expected).norm() <= 1e-12);
  CHECK(std::abs(f.cost_op - std::numbers::sqrt2) <= 1e-10);
  CHECK(std::abs(f.cost_F - std::numbers::sqrt2) <= 1e-10);
}

TEST_CASE("Frobenius solution is exact when B lies in the range of A") {
  const DenseMatrix A = oracle::random_gaussian(20, 5, 1);
  const DenseRRRInstance inst{A, A * oracle::random_gaussian(5, 2, 2) * oracle::random_gaussian(2, 7, 3), 2};
  CHECK(frobenius_rrr(inst).cost_F <= 1e-10 * inst.B.norm());
}

TEST_CASE("Frobenius solution beats random rank-k competitors") {
  const DenseRRRInstance inst = random_instance(30, 8, 10, 3, 4);
  const FrobeniusSolution f = frobenius_rrr(inst);
  CHECK(oracle::numerical_rank(f.X) <= 3);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const DenseMatrix Y = oracle::random_gaussian(8, 3, 100 + s) * oracle::random_gaussian(3, 10, 300 + s);
    CHECK(f.cost_F <= (inst.A * Y - inst.B).norm());
  }
}

TEST_CASE("opt_value examples") {
  CHECK(opt_value(intro()) == doctest::Approx(1.1).epsilon(1e-14));
  const DenseMatrix B = oracle::random_gaussian(15, 6, 5);
  CHECK(opt_value({B, B, 2}) == doctest::Approx(oracle::sigma(B, 2)).epsilon(1e-12));

  // B orthogonal to colspan(A), k at least rank(B).
  DenseMatrix A = DenseMatrix::Zero(10, 3);
  A.topRows(3) = DenseMatrix::Identity(3, 3);
  DenseMatrix Bp = DenseMatrix::Zero(10, 3);
  Bp.bottomRows(7) = oracle::random_gaussian(7, 3, 6);
  CHECK(opt_value({A, Bp, 3}) == doctest::Approx(oracle::norm2(Bp)).epsilon(1e-12));
}

TEST_CASE("opt_value matches the dense formula on random instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const DenseRRRInstance inst = random_instance(25, 5, 8, 1 + seed % 4, seed);
    CHECK(opt_value(inst) == doctest::Approx(oracle::opt(inst.A, inst.B, inst.k)).epsilon(1e-10));
  }
}

TEST_CASE("Sou-Rantzer solution on the intro example") {
  const SouRantzerSolution s = sou_rantzer_solution(intro(), 1.2);
  CHECK(s.cost <= 1.2);
  CHECK(op_cost(intro(), s.X) == doctest::Approx(s.cost).epsilon(1e-12));
  CHECK(oracle::numerical_rank(s.X) <= 1);
}

TEST_CASE("Sou-Rantzer solution just above the optimum") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const DenseRRRInstance inst = random_instance(20 + seed % 10, 4 + seed % 3, 6 + seed % 5,
                                                  1 + seed % 3, seed);
    const double beta = oracle::opt(inst.A, inst.B, inst.k) * (1.0 + 1e-3);
    const SouRantzerSolution s = sou_rantzer_solution(inst, beta);
    CHECK(s.cost <= beta);
    CHECK(oracle::numerical_rank(s.X, 1e-9) <= inst.k);
  }
}

TEST_CASE("Sou-Rantzer solution rejects beta at or below the optimum") {
  CHECK_THROWS_AS(sou_rantzer_solution(intro(), 1.05), PreconditionError);
  CHECK_THROWS_AS(sou_rantzer_solution(intro(), 1.1), PreconditionError);
}

TEST_CASE("binary search locates the optimum") {
  const double tol = 1e-6;
  CHECK(std::abs(binary_search_opt(intro(), tol) - 1.1) <= tol);
  const DenseMatrix B = oracle::random_gaussian(12, 5, 9);
  CHECK(std::abs(binary_search_opt({B, B, 2}, tol) - oracle::sigma(B, 2)) <= tol);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const DenseRRRInstance inst = random_instance(30, 3 + seed % 5, 5 + seed % 7, 1 + seed % 3, seed + 70);
    CHECK(std::abs(binary_search_opt(inst, tol) - opt_value(inst)) <= 2.0 * tol);
  }
  CHECK_THROWS_AS(binary_search_opt(intro(), 0.0), InvalidArgument);
}

TEST_CASE("Frobenius solution is within sqrt(2) of the optimum") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const DenseRRRInstance inst = random_instance(30, 6, 9, 1 + seed % 4, seed + 200);
    CHECK(frobenius_rrr(inst).cost_op <= std::numbers::sqrt2 * opt_value(inst) * (1.0 + 1e-12));
  }
  CHECK(frobenius_rrr(intro()).cost_op / opt_value(intro()) > 1.28);
}

TEST_CASE("feasibility threshold follows the singular value count") {
  // With A = I the optimum is sigma_{k+1}(B): a rank-k fit below s exists iff k >= sve(B/s).
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const DenseMatrix B = oracle::random_gaussian(12, 8, seed + 400);
    const Vector s = oracle::svals(B);
    const double level = 0.5 * (s(2) + s(3));
    const Index k = sve(s / level);
    REQUIRE(k == 3);
    const DenseRRRInstance ok{DenseMatrix::Identity(12, 12), B, k};
    CHECK(sou_rantzer_solution(ok, level).cost < level);
    const DenseRRRInstance short_rank{DenseMatrix::Identity(12, 12), B, k - 1};
    CHECK_THROWS_AS(sou_rantzer_solution(short_rank, level), PreconditionError);
  }
}

TEST_CASE("dense pipeline reaches (1+eps) of the optimum") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const DenseRRRInstance inst = random_instance(40, 6, 10, 1 + seed % 5, seed + 600);
    const DensePipelineResult r = sou_rantzer_pipeline(inst, 0.05);
    CHECK(r.opt == doctest::Approx(opt_value(inst)).epsilon(1e-10));
    CHECK(r.beta == doctest::Approx(1.05 * r.opt));
    CHECK(op_cost(inst, r.X) <= r.beta);
    CHECK(oracle::numerical_rank(r.X, 1e-9) <= inst.k);
  }
  const DensePipelineResult i = sou_rantzer_pipeline(intro(), 0.05);
  CHECK(op_cost(intro(), i.X) <= 1.1 * 1.05);
}

TEST_CASE("outputs are bit-exact across calls") {
  const DenseRRRInstance inst = random_instance(30, 5, 7, 2, 77);
  CHECK(frobenius_rrr(inst).X == frobenius_rrr(inst).X);
  CHECK(sou_rantzer_solution(inst, 2.0 * opt_value(inst)).X ==
        sou_rantzer_solution(inst, 2.0 * opt_value(inst)).X);
  CHECK(binary_search_opt(inst, 1e-6) == binary_search_opt(inst, 1e-6));
}

TEST_CASE("instance validation") {
  const DenseMatrix A = oracle::random_gaussian(5, 2, 1);
  CHECK_THROWS_AS(opt_value({A, oracle::random_gaussian(4, 2, 2), 1}), DimensionError);
  CHECK_THROWS_AS(opt_value({A, oracle::random_gaussian(5, 2, 2), 3}), InvalidArgument);
  CHECK_THROWS_AS(opt_value({oracle::random_gaussian(2, 5, 1), oracle::random_gaussian(2, 5, 2), 1}),
                  DimensionError);
}
