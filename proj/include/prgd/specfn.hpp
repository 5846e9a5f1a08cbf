#pragma once

// Special functions behind the privacy formulas: log-gamma, the beta function,
// the regularized incomplete beta function I_z(a, b), the odd-dimension
// series for the ball-overlap delta, and the derivative of I_z(1/2, (d+1)/2).

#include <cmath>
#include <limits>
#include <string>

#include "prgd/errors.hpp"

namespace prgd::specfn {

struct BetaParams {
  double a;
  double b;
};

inline void validate(const BetaParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0))
    throw DomainError("beta parameters must be positive (a=" + std::to_string(p.a) +
                      ", b=" + std::to_string(p.b) + ")");
}

// ln Gamma(x) for x > 0. Uses the reentrant lgamma_r where the C library
// provides it, so concurrent callers never touch the global signgam.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError("log_gamma requires x > 0, got " + std::to_string(x));
#if defined(__GLIBC__) || defined(__APPLE__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

inline double log_beta(double a, double b) {
  validate({a, b});
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

inline double beta(double a, double b) { return std::exp(log_beta(a, b)); }

namespace detail {

inline constexpr int kMaxFractionIterations = 300;
inline constexpr double kFractionTolerance = 1e-15;
inline constexpr double kTiny = 1e-300;

// Continued fraction for I_z(a,b) (modified Lentz). Converges quickly for
// z < (a+1)/(a+b+2).
inline double incomplete_beta_fraction(double z, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * z / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxFractionIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * z / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;

    aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kFractionTolerance) return h;
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge (z=" +
                         std::to_string(z) + ", a=" + std::to_string(a) +
                         ", b=" + std::to_string(b) + ")");
}

}  // namespace detail

// Regularized incomplete beta function I_z(a, b), the Beta(a, b) CDF at z.
inline double reg_inc_beta(double z, const BetaParams& p) {
  validate(p);
  if (!(z >= 0.0 && z <= 1.0))
    throw DomainError("reg_inc_beta requires z in [0,1], got " + std::to_string(z));
  if (z == 0.0) return 0.0;
  if (z == 1.0) return 1.0;

  const double log_front =
      p.a * std::log(z) + p.b * std::log1p(-z) - log_beta(p.a, p.b);
  const double front = std::exp(log_front);
  if (z < (p.a + 1.0) / (p.a + p.b + 2.0))
    return front * detail::incomplete_beta_fraction(z, p.a, p.b) / p.a;
  // Complementary region: I_z(a,b) = 1 - I_{1-z}(b,a).
  return 1.0 - front * detail::incomplete_beta_fraction(1.0 - z, p.b, p.a) / p.b;
}

// delta = (dx/2) * sum_{k=0}^{(d-1)/2} (1/2)_k (1 - (dx/2)^2)^k / k!
// Closed form of I_{(dx/2)^2}(1/2, (d+1)/2) for odd d.
inline double series_delta_odd_d(double delta_x, int d) {
  if (d < 1 || d % 2 == 0)
    throw DomainError("series_delta_odd_d requires an odd positive dimension, got " +
                      std::to_string(d));
  if (!(delta_x >= 0.0 && delta_x <= 2.0))
    throw DomainError("series_delta_odd_d requires delta_x in [0,2], got " +
                      std::to_string(delta_x));
  const double half = delta_x / 2.0;
  const double q = 1.0 - half * half;
  const int terms = (d - 1) / 2;
  double term = 1.0;  // (1/2)_k q^k / k!, running product
  double sum = 1.0;
  for (int k = 1; k <= terms; ++k) {
    term *= (0.5 + (k - 1)) * q / k;
    sum += term;
  }
  return half * sum;
}

// d/dz I_z(1/2, (d+1)/2) = (1-z)^{(d-1)/2} z^{-1/2} / B(1/2, (d+1)/2).
inline double reg_inc_beta_derivative(double z, int d) {
  if (d < 1) throw DomainError("dimension must be positive, got " + std::to_string(d));
  if (!(z > 0.0 && z < 1.0))
    throw DomainError("reg_inc_beta_derivative is singular outside (0,1), got z=" +
                      std::to_string(z));
  const double b = 0.5 * (d + 1);
  const double log_value =
      0.5 * (d - 1) * std::log1p(-z) - 0.5 * std::log(z) - log_beta(0.5, b);
  return std::exp(log_value);
}

}  // namespace prgd::specfn
