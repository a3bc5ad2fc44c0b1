#include "opnorm_rrr/cheb_poly.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rrr {

namespace {

using Wide = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<200>>;

constexpr double kOverflowGuard = 1e300;

void trim(std::vector<double>& c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
}

double inv_sqrt(double x) { return 1.0 / std::sqrt(1.0 - x); }

double clenshaw(const ChebyshevSeries& s, double x) {
  const double t = (2.0 * x - s.lo - s.hi) / (s.hi - s.lo);
  double b1 = 0.0, b2 = 0.0;
  for (std::size_t j = s.coeffs.size(); j-- > 1;) {
    const double b0 = s.coeffs[j] + 2.0 * t * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  const double c0 = s.coeffs.empty() ? 0.0 : s.coeffs[0];
  return c0 + t * b1 - b2;
}

}  // namespace

Polynomial Polynomial::from_monomial(std::vector<double> coeffs) {
  Polynomial p;
  trim(coeffs);
  p.monomial_ = std::move(coeffs);
  for (double c : p.monomial_) p.l1_norm_ += std::abs(c);
  return p;
}

Polynomial Polynomial::from_chebyshev(std::vector<double> coeffs, double lo, double hi) {
  if (!(hi > lo)) throw InvalidArgument("chebyshev series needs lo < hi");
  trim(coeffs);
  const std::size_t n = coeffs.size();
  const Wide a = Wide(2) / (Wide(hi) - Wide(lo));
  const Wide b = -(Wide(hi) + Wide(lo)) / (Wide(hi) - Wide(lo));
  std::vector<Wide> acc(n, Wide(0)), prev, cur;
  // prev = T_{j-1}(a x + b), cur = T_j(a x + b) in monomial form.
  if (n > 0) {
    cur = {Wide(1)};
    acc[0] += Wide(coeffs[0]);
  }
  for (std::size_t j = 1; j < n; ++j) {
    std::vector<Wide> next(j + 1, Wide(0));
    if (j == 1) {
      next[0] = b;
      next[1] = a;
    } else {
      for (std::size_t i = 0; i < cur.size(); ++i) {
        next[i] += 2 * b * cur[i];
        next[i + 1] += 2 * a * cur[i];
      }
      for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
    }
    prev = std::move(cur);
    cur = std::move(next);
    const Wide cj(coeffs[j]);
    if (coeffs[j] != 0.0)
      for (std::size_t i = 0; i < cur.size(); ++i) acc[i] += cj * cur[i];
  }
  std::vector<double> mono(n);
  for (std::size_t i = 0; i < n; ++i) {
    mono[i] = acc[i].convert_to<double>();
    if (!(std::abs(mono[i]) < kOverflowGuard))
      throw Error("monomial coefficient of degree " + std::to_string(i) +
                  " overflows; use a smaller degree");
  }
  Polynomial p = from_monomial(std::move(mono));
  p.series_ = ChebyshevSeries{std::move(coeffs), lo, hi};
  return p;
}

double Polynomial::chebyshev_l1_norm() const {
  if (!series_) return l1_norm_;
  double s = 0.0;
  for (double c : series_->coeffs) s += std::abs(c);
  return s;
}

Polynomial chebyshev(int d) {
  if (d < 0) throw InvalidArgument("chebyshev: degree must be >= 0");
  if (d > kChebyshevDegreeCap)
    throw InvalidArgument("chebyshev: degree " + std::to_string(d) + " exceeds the cap of " +
                          std::to_string(kChebyshevDegreeCap));
  // The recurrence runs in extended precision, so every coefficient is the
  // correctly rounded integer.
  std::vector<double> series(static_cast<std::size_t>(d) + 1, 0.0);
  series[d] = 1.0;
  return Polynomial::from_chebyshev(std::move(series));
}

Polynomial taylor_inv_sqrt(int terms) {
  if (terms < 1) throw InvalidArgument("taylor_inv_sqrt: need at least one term");
  std::vector<double> c(static_cast<std::size_t>(terms));
  c[0] = 1.0;
  for (int j = 0; j + 1 < terms; ++j) c[j + 1] = c[j] * (2.0 * j + 1.0) / (2.0 * j + 2.0);
  return Polynomial::from_monomial(std::move(c));
}

Polynomial degree_reduce(const Polynomial& q, int d) {
  if (d < 1) throw InvalidArgument("degree_reduce: d must be >= 1");
  const auto& qc = q.monomial_coeffs();
  const int out_degree = std::min<int>(d, q.degree());
  std::vector<double> cheb(static_cast<std::size_t>(out_degree) + 1, 0.0);
  const double ln2 = std::log(2.0);
  for (std::size_t s = 0; s < qc.size(); ++s) {
    if (qc[s] == 0.0) continue;
    const long si = static_cast<long>(s);
    // t ranges over |s - 2t| <= d; log C(s,t) advanced incrementally.
    const long t_lo = std::max<long>(0, (si - d + 1) / 2);
    const long t_hi = std::min<long>(si, (si + d) / 2);
    double log_binom = std::lgamma(si + 1.0) - std::lgamma(t_lo + 1.0) - std::lgamma(si - t_lo + 1.0);
    for (long t = t_lo; t <= t_hi; ++t) {
      const long j = std::labs(si - 2 * t);
      if (j <= d) cheb[static_cast<std::size_t>(j)] += qc[s] * std::exp(log_binom - si * ln2);
      log_binom += std::log(static_cast<double>(si - t)) - std::log(static_cast<double>(t + 1));
    }
  }
  return Polynomial::from_chebyshev(std::move(cheb));
}

double eval_scalar(const Polynomial& p, double x) {
  const auto& c = p.monomial_coeffs();
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) acc = acc * x + c[i];
  return acc;
}

double eval_stable(const Polynomial& p, double x) {
  if (p.chebyshev()) return clenshaw(*p.chebyshev(), x);
  return eval_scalar(p, x);
}

double inv_sqrt_grid_error(const Polynomial& p, double hi) {
  double worst = 0.0;
  for (int i = 0; i <= kCertificationPoints; ++i) {
    const double x = hi * static_cast<double>(i) / kCertificationPoints;
    worst = std::max(worst, std::abs(eval_stable(p, x) - inv_sqrt(x)));
  }
  return worst;
}

CertifiedPolynomial build_r(double epsilon, double delta) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) throw InvalidArgument("build_r: epsilon must lie in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("build_r: delta must lie in (0, 1)");
  const int terms = static_cast<int>(std::ceil(4.0 * std::log(1.0 / (epsilon * delta)) / epsilon)) + 1;
  const Polynomial q = taylor_inv_sqrt(terms);
  const double half_delta = delta / 2.0;
  int d = static_cast<int>(
      std::ceil(std::sqrt(2.0 * terms * std::log(2.0 * q.l1_norm() / half_delta))));
  d = std::clamp(d, 1, terms - 1 > 0 ? terms - 1 : 1);

  CertifiedPolynomial out;
  out.poly = degree_reduce(q, d);
  out.epsilon = epsilon;
  out.delta = delta;
  out.taylor_terms = terms;
  out.taylor_l1 = q.l1_norm();
  const double hi = 1.0 / (1.0 + epsilon);
  out.sup_error = inv_sqrt_grid_error(out.poly, hi);
  if (!(out.sup_error <= delta))
    throw CertificationError("build_r: grid error " + std::to_string(out.sup_error) +
                             " exceeds delta " + std::to_string(delta));
  const double l1_bound = std::pow(1.0 + std::numbers::sqrt2, out.poly.degree()) * q.l1_norm();
  if (!(out.poly.l1_norm() <= l1_bound * (1.0 + 1e-12)))
    throw CertificationError("build_r: coefficient norm exceeds its bound");
  return out;
}

CertifiedPolynomial economize(const CertifiedPolynomial& r, double delta, int max_degree) {
  const double hi = 1.0 / (1.0 + r.epsilon);
  const double mid = 0.5 * hi;
  double best_error = 0.0;
  for (int m = 1; m <= max_degree; ++m) {
    const int nodes = m + 1;
    std::vector<double> values(static_cast<std::size_t>(nodes));
    for (int k = 0; k < nodes; ++k)
      values[k] = eval_stable(r.poly, mid + mid * std::cos(std::numbers::pi * (k + 0.5) / nodes));
    std::vector<double> coeffs(static_cast<std::size_t>(nodes), 0.0);
    for (int j = 0; j < nodes; ++j) {
      double s = 0.0;
      for (int k = 0; k < nodes; ++k)
        s += values[k] * std::cos(std::numbers::pi * j * (k + 0.5) / nodes);
      coeffs[j] = 2.0 * s / nodes;
    }
    coeffs[0] *= 0.5;
    Polynomial p = Polynomial::from_chebyshev(coeffs, 0.0, hi);
    best_error = inv_sqrt_grid_error(p, hi);
    if (best_error <= delta) {
      CertifiedPolynomial out = r;
      out.poly = std::move(p);
      out.delta = delta;
      out.sup_error = best_error;
      return out;
    }
  }
  throw CertificationError("economize: no degree <= " + std::to_string(max_degree) +
                           " reaches error " + std::to_string(delta) + " (last " +
                           std::to_string(best_error) + ")");
}

nlohmann::json to_json(const Polynomial& p) {
  nlohmann::json j;
  j["degree"] = p.degree();
  j["coefficients"] = p.monomial_coeffs();
  j["l1_norm"] = p.l1_norm();
  if (p.chebyshev()) {
    j["chebyshev"] = {{"lo", p.chebyshev()->lo},
                      {"hi", p.chebyshev()->hi},
                      {"coefficients", p.chebyshev()->coeffs}};
  }
  return j;
}

Polynomial polynomial_from_json(const nlohmann::json& j) {
  if (j.contains("chebyshev")) {
    const auto& c = j.at("chebyshev");
    return Polynomial::from_chebyshev(c.at("coefficients").get<std::vector<double>>(),
                                      c.at("lo").get<double>(), c.at("hi").get<double>());
  }
  return Polynomial::from_monomial(j.at("coefficients").get<std::vector<double>>());
}

}  // namespace rrr
