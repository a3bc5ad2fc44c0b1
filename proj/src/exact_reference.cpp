#include "opnorm_rrr/exact_reference.hpp"

#include "opnorm_rrr/dense_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rrr {

namespace {

constexpr double kFeasibilitySlack = 1e-9;

struct Residual {
  DenseMatrix U;    // orthonormal basis of colspan(A)
  DenseMatrix UtB;  // UᵀB
  DenseMatrix R;    // (I - UUᵀ)B
};

Residual split(const DenseRRRInstance& inst) {
  Residual r;
  r.U = orthonormal_basis(inst.A);
  r.UtB = r.U.transpose() * inst.B;
  r.R = inst.B - r.U * r.UtB;
  return r;
}

double sigma_at(const Vector& s, Index i) { return i < s.size() ? s(i) : 0.0; }

}  // namespace

void DenseRRRInstance::validate() const {
  if (A.rows() != B.rows()) throw DimensionError("A and B must have the same number of rows");
  if (A.rows() < A.cols()) throw DimensionError("need n >= c");
  if (k < 1 || k > std::min(A.cols(), B.cols()))
    throw InvalidArgument("k must lie in [1, min(c, d)]");
}

FrobeniusSolution frobenius_rrr(const DenseRRRInstance& inst) {
  inst.validate();
  const Residual r = split(inst);
  FrobeniusSolution out;
  out.X = pseudo_inverse(inst.A) * (r.U * truncate_rank(r.UtB, inst.k));
  const DenseMatrix E = inst.A * out.X - inst.B;
  out.cost_F = E.norm();
  out.cost_op = spectral_norm(E);
  return out;
}

double opt_value(const DenseRRRInstance& inst) {
  inst.validate();
  const Residual r = split(inst);
  return std::max(spectral_norm(r.R), sigma_at(singular_values(inst.B), inst.k));
}

SouRantzerSolution sou_rantzer_solution(const DenseRRRInstance& inst, double beta) {
  const double opt = opt_value(inst);
  if (!(beta > opt))
    throw PreconditionError("beta = " + std::to_string(beta) + " does not exceed opt = " +
                            std::to_string(opt));
  const Residual r = split(inst);
  const Index d = inst.B.cols();
  const DenseMatrix delta = r.R.transpose() * r.R;
  const SymmetricEigen eig =
      symmetric_eigen(beta * beta * DenseMatrix::Identity(d, d) - 0.5 * (delta + delta.transpose()));
  if (!(eig.values(d - 1) > 0.0))
    throw PreconditionError("beta^2 I - Delta is not positive definite");
  const Vector lam = eig.values.cwiseMax(0.0);
  const DenseMatrix inv_root =
      eig.vectors * lam.cwiseSqrt().cwiseInverse().asDiagonal() * eig.vectors.transpose();
  const DenseMatrix root = eig.vectors * lam.cwiseSqrt().asDiagonal() * eig.vectors.transpose();
  const DenseMatrix Ck = truncate_rank(r.UtB * inv_root, inst.k);
  SouRantzerSolution out;
  out.X = pseudo_inverse(inst.A) * (r.U * (Ck * root));
  out.cost = spectral_norm(inst.A * out.X - inst.B);
  return out;
}

double binary_search_opt(const DenseRRRInstance& inst, double tol) {
  inst.validate();
  if (!(tol > 0.0)) throw InvalidArgument("binary_search_opt: tol must be positive");
  const Residual r = split(inst);
  const double norm_b = spectral_norm(inst.B);
  if (norm_b == 0.0) return 0.0;
  const DenseMatrix delta = r.R.transpose() * r.R;
  const SymmetricEigen eig = symmetric_eigen(0.5 * (delta + delta.transpose()));
  const Vector lam = eig.values.cwiseMax(0.0);
  const DenseMatrix UtBV = r.UtB * eig.vectors;
  const double residual_norm = std::sqrt(lam(0));

  auto feasible = [&](double beta) {
    const Vector gap = (beta * beta - lam.array()).matrix();
    if (!(gap.minCoeff() > 0.0)) return false;
    const DenseMatrix C = UtBV * gap.cwiseSqrt().cwiseInverse().asDiagonal();
    return sigma_at(singular_values(C), inst.k) <= 1.0 + kFeasibilitySlack;
  };

  double lo = residual_norm * (1.0 - tol);
  double hi = norm_b * (1.0 + 1e-3) + tol;
  while (!feasible(hi)) hi *= 2.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

DensePipelineResult sou_rantzer_pipeline(const DenseRRRInstance& inst, double epsilon) {
  inst.validate();
  const Index d = inst.B.cols();
  const Residual r = split(inst);
  DenseMatrix gram_b(d, d);
  gram_b.setZero();
  gram_b.selfadjointView<Eigen::Lower>().rankUpdate(inst.B.transpose());
  DenseMatrix delta = gram_b;
  delta.selfadjointView<Eigen::Lower>().rankUpdate(r.UtB.transpose(), -1.0);

  Eigen::SelfAdjointEigenSolver<DenseMatrix> gram_eig(gram_b, Eigen::EigenvaluesOnly);
  const Vector gram_vals = gram_eig.eigenvalues().reverse();
  const double sigma_k1 = inst.k < d ? std::sqrt(std::max(gram_vals(inst.k), 0.0)) : 0.0;

  Eigen::SelfAdjointEigenSolver<DenseMatrix> delta_eig(delta);
  const Vector lam = delta_eig.eigenvalues().cwiseMax(0.0);
  const DenseMatrix& V = delta_eig.eigenvectors();

  DensePipelineResult out;
  out.opt = std::max(std::sqrt(lam(d - 1)), sigma_k1);
  out.beta = (1.0 + epsilon) * out.opt;
  if (out.beta == 0.0) {
    out.X = DenseMatrix::Zero(inst.A.cols(), d);
    return out;
  }
  const Vector gap = (out.beta * out.beta - lam.array()).matrix();
  const DenseMatrix C = (r.UtB * V) * gap.cwiseSqrt().cwiseInverse().asDiagonal() * V.transpose();
  const DenseMatrix Ck = truncate_rank(C, inst.k);
  const DenseMatrix Ck_root = ((Ck * V) * gap.cwiseSqrt().asDiagonal()) * V.transpose();
  out.X = pseudo_inverse(inst.A) * (r.U * Ck_root);
  return out;
}

}  // namespace rrr
