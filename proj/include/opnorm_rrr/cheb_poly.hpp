#pragma once

#include "opnorm_rrr/common.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace rrr {

// sum_j coeffs[j] * T_j((2x - lo - hi) / (hi - lo))
struct ChebyshevSeries {
  std::vector<double> coeffs;
  double lo = -1.0;
  double hi = 1.0;
};

class Polynomial {
 public:
  Polynomial() = default;

  static Polynomial from_monomial(std::vector<double> coeffs);
  // Keeps the series and derives monomial coefficients in extended precision.
  static Polynomial from_chebyshev(std::vector<double> coeffs, double lo = -1.0, double hi = 1.0);

  const std::vector<double>& monomial_coeffs() const { return monomial_; }
  int degree() const { return monomial_.empty() ? 0 : static_cast<int>(monomial_.size()) - 1; }
  double l1_norm() const { return l1_norm_; }
  bool is_zero() const { return monomial_.empty(); }
  const std::optional<ChebyshevSeries>& chebyshev() const { return series_; }
  // Sum of |Chebyshev coefficients|, or l1_norm when no series is stored.
  double chebyshev_l1_norm() const;

 private:
  std::vector<double> monomial_;
  double l1_norm_ = 0.0;
  std::optional<ChebyshevSeries> series_;
};

// Largest degree for which chebyshev() is supported.
constexpr int kChebyshevDegreeCap = 60;
// Monomial evaluation of a polynomial is trusted only below this l1 norm.
constexpr double kMonomialGuard = 1e12;

Polynomial chebyshev(int d);
Polynomial taylor_inv_sqrt(int terms);
Polynomial degree_reduce(const Polynomial& q, int d);

// Horner's rule on the monomial coefficients.
double eval_scalar(const Polynomial& p, double x);
// Clenshaw on the stored series; falls back to Horner when there is none.
double eval_stable(const Polynomial& p, double x);

struct CertifiedPolynomial {
  Polynomial poly;
  double epsilon = 0.0;  // interval is [0, 1/(1+epsilon)]
  double delta = 0.0;    // certified bound on |r(x) - (1-x)^(-1/2)|
  int taylor_terms = 0;
  double taylor_l1 = 0.0;
  double sup_error = 0.0;  // measured on the certification grid
};

constexpr int kCertificationPoints = 10000;

// Sup of |p(x) - (1-x)^(-1/2)| over kCertificationPoints+1 uniform points of [0, hi].
double inv_sqrt_grid_error(const Polynomial& p, double hi);

CertifiedPolynomial build_r(double epsilon, double delta);

// Smallest-degree Chebyshev interpolant of r on [0, 1/(1+eps)] whose grid error
// against (1-x)^(-1/2) is within `delta`; throws CertificationError when no
// degree up to max_degree qualifies.
CertifiedPolynomial economize(const CertifiedPolynomial& r, double delta, int max_degree);

nlohmann::json to_json(const Polynomial& p);
Polynomial polynomial_from_json(const nlohmann::json& j);

}  // namespace rrr
