#include "prgd/specfn.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace prgd::specfn {
namespace {

// ln((n-1)!) by summing logs of the integer factors.
double log_factorial_minus_one(int n) {
  double s = 0.0;
  for (int k = 2; k < n; ++k) s += std::log(static_cast<double>(k));
  return s;
}

// ln Gamma(n + 1/2) = ln((2n)! sqrt(pi) / (4^n n!)), via the product
// Gamma(n+1/2) = sqrt(pi) * prod_{k=1}^{n} (k - 1/2).
double log_gamma_half_integer(int n) {
  double s = 0.5 * std::log(std::numbers::pi);
  for (int k = 1; k <= n; ++k) s += std::log(k - 0.5);
  return s;
}

// I_z(a, b) for integer a, b from the binomial tail:
// sum_{j=a}^{a+b-1} C(a+b-1, j) z^j (1-z)^{a+b-1-j}.
double binomial_tail(double z, int a, int b) {
  const int n = a + b - 1;
  double total = 0.0;
  for (int j = a; j <= n; ++j)
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                      j * std::log(z) + (n - j) * std::log1p(-z));
  return total;
}

// I_z(a, n) = z^a sum_{k<n} (a)_k (1-z)^k / k! for integer n.
double finite_sum(double z, double a, int n) {
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < n; ++k) {
    term *= (a + k - 1) * (1.0 - z) / k;
    sum += term;
  }
  return std::pow(z, a) * sum;
}

TEST(LogGamma, Examples) {
  EXPECT_EQ(log_gamma(1.0), 0.0);
  EXPECT_NEAR(log_gamma(0.5), std::log(std::sqrt(std::numbers::pi)), 1e-15);
  EXPECT_NEAR(log_gamma(0.5), 0.5723649429, 1e-10);
  double factorial = 1.0;
  for (int k = 2; k <= 10; ++k) factorial *= k;
  ASSERT_EQ(factorial, 3628800.0);
  EXPECT_NEAR(log_gamma(11.0), std::log(factorial), 1e-13 * 15.1);
  EXPECT_NEAR(log_gamma(11.0), 15.1044125731, 1e-10);
}

TEST(LogGamma, RelativeErrorOnIntegerAndHalfIntegerGrid) {
  for (int n = 3; n <= 200; ++n) {
    const double expected = log_factorial_minus_one(n);
    EXPECT_LE(std::fabs(log_gamma(n) - expected), 1e-13 * std::fabs(expected)) << "x=" << n;
  }
  for (int n = 0; n < 200; ++n) {
    const double expected = log_gamma_half_integer(n);
    const double x = n + 0.5;
    EXPECT_LE(std::fabs(log_gamma(x) - expected), 1e-13 * std::max(1.0, std::fabs(expected)))
        << "x=" << x;
  }
  EXPECT_EQ(log_gamma(2.0), 0.0);
}

TEST(LogGamma, RejectsNonPositive) {
  EXPECT_THROW(log_gamma(0.0), DomainError);
  EXPECT_THROW(log_gamma(-1.5), DomainError);
  EXPECT_THROW(log_gamma(std::nan("")), DomainError);
}

TEST(Beta, Examples) {
  EXPECT_NEAR(beta(1.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(beta(0.5, 1.0), 2.0, 2e-15);
  const double gamma_2_5 = 1.5 * 0.5 * std::sqrt(std::numbers::pi);
  EXPECT_NEAR(beta(0.5, 2.0), std::sqrt(std::numbers::pi) / gamma_2_5, 1e-12);
  EXPECT_NEAR(beta(0.5, 2.0), 4.0 / 3.0, 1e-12);
  EXPECT_THROW(beta(0.0, 1.0), DomainError);
  EXPECT_THROW(beta(1.0, -2.0), DomainError);
}

TEST(RegIncBeta, Examples) {
  EXPECT_NEAR(reg_inc_beta(0.3, {1.0, 1.0}), 0.3, 1e-15);
  EXPECT_EQ(reg_inc_beta(0.0, {2.5, 0.7}), 0.0);
  EXPECT_EQ(reg_inc_beta(1.0, {2.5, 0.7}), 1.0);
  EXPECT_NEAR(reg_inc_beta(0.25, {0.5, 2.0}), 0.5 * (1.0 + 0.5 * 0.75), 1e-12);
  EXPECT_NEAR(reg_inc_beta(0.25, {0.5, 2.0}), 0.6875, 1e-12);
}

TEST(RegIncBeta, DomainErrors) {
  EXPECT_THROW(reg_inc_beta(-0.1, {1.0, 1.0}), DomainError);
  EXPECT_THROW(reg_inc_beta(1.1, {1.0, 1.0}), DomainError);
  EXPECT_THROW(reg_inc_beta(0.5, {0.0, 1.0}), DomainError);
  EXPECT_THROW(reg_inc_beta(0.5, {1.0, -1.0}), DomainError);
}

TEST(RegIncBeta, MatchesBinomialTailForIntegerShapes) {
  for (int a = 1; a <= 12; ++a)
    for (int b = 1; b <= 12; ++b)
      for (double z : {0.01, 0.1, 0.33, 0.5, 0.77, 0.95}) {
        EXPECT_NEAR(reg_inc_beta(z, {double(a), double(b)}), binomial_tail(z, a, b), 1e-12)
            << "z=" << z << " a=" << a << " b=" << b;
      }
}

TEST(RegIncBeta, MatchesFiniteSumForIntegerSecondShape) {
  for (double a : {0.5, 1.5, 3.25, 7.0})
    for (int n = 1; n <= 30; ++n)
      for (double z : {0.05, 0.25, 0.5, 0.8, 0.99})
        EXPECT_NEAR(reg_inc_beta(z, {a, double(n)}), finite_sum(z, a, n), 1e-12)
            << "z=" << z << " a=" << a << " n=" << n;
}

TEST(RegIncBeta, SymmetryIdentity) {
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> shape(0.05, 60.0);
  for (int i = 0; i < 1000; ++i) {
    const double z = unit(gen), a = shape(gen), b = shape(gen);
    const double lhs = reg_inc_beta(z, {a, b});
    const double rhs = 1.0 - reg_inc_beta(1.0 - z, {b, a});
    EXPECT_LE(std::fabs(lhs - rhs), 1e-12) << "z=" << z << " a=" << a << " b=" << b;
  }
}

TEST(RegIncBeta, NondecreasingInZ) {
  for (double a : {0.5, 1.0, 4.0, 20.0})
    for (double b : {0.5, 1.0, 13.0, 26.0}) {
      double prev = 0.0;
      for (int i = 0; i <= 1000; ++i) {
        const double v = reg_inc_beta(i / 1000.0, {a, b});
        EXPECT_GE(v, prev) << "a=" << a << " b=" << b << " z=" << i / 1000.0;
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        prev = v;
      }
    }
}

TEST(SeriesDeltaOddD, Examples) {
  EXPECT_NEAR(series_delta_odd_d(1.2, 1), 0.6, 1e-15);
  for (int d : {1, 3, 9, 41}) EXPECT_EQ(series_delta_odd_d(0.0, d), 0.0);
  EXPECT_NEAR(series_delta_odd_d(1.0, 3), 0.5 * (1.0 + 0.5 * 0.75), 1e-15);
  EXPECT_NEAR(series_delta_odd_d(1.0, 3), 0.6875, 1e-15);
}

TEST(SeriesDeltaOddD, DomainErrors) {
  EXPECT_THROW(series_delta_odd_d(1.0, 2), DomainError);
  EXPECT_THROW(series_delta_odd_d(1.0, 0), DomainError);
  EXPECT_THROW(series_delta_odd_d(-0.1, 3), DomainError);
  EXPECT_THROW(series_delta_odd_d(2.1, 3), DomainError);
}

TEST(SeriesDeltaOddD, AgreesWithContinuedFraction) {
  for (int d = 1; d <= 41; d += 2)
    for (int i = 0; i < 50; ++i) {
      const double dx = 2.0 * i / 49.0;
      const double z = (dx / 2.0) * (dx / 2.0);
      EXPECT_LE(std::fabs(series_delta_odd_d(dx, d) - reg_inc_beta(z, {0.5, 0.5 * (d + 1)})),
                1e-10)
          << "d=" << d << " dx=" << dx;
    }
}

// Central difference of I_z(1/2, (d+1)/2) in z. Near z = 1 the value is
// 1 - tiny, so the difference is taken on the complement I_{1-z}(b, a).
double finite_difference(double z, int d, double h) {
  const BetaParams p{0.5, 0.5 * (d + 1)};
  if (reg_inc_beta(z, p) < 0.5)
    return (reg_inc_beta(z + h, p) - reg_inc_beta(z - h, p)) / (2.0 * h);
  const BetaParams q{p.b, p.a};
  return (reg_inc_beta(1.0 - (z - h), q) - reg_inc_beta(1.0 - (z + h), q)) / (2.0 * h);
}

TEST(RegIncBetaDerivative, Examples) {
  EXPECT_NEAR(reg_inc_beta_derivative(0.25, 1), 1.0, 1e-13);
  EXPECT_NEAR(reg_inc_beta_derivative(0.5, 1), 1.0 / std::sqrt(2.0), 1e-13);
  EXPECT_NEAR(finite_difference(0.25, 1, 1e-6), 1.0, 1e-8);
  EXPECT_NEAR(finite_difference(0.5, 1, 1e-6), 1.0 / std::sqrt(2.0), 1e-8);
}

TEST(RegIncBetaDerivative, SingularEndpoints) {
  EXPECT_THROW(reg_inc_beta_derivative(0.0, 3), DomainError);
  EXPECT_THROW(reg_inc_beta_derivative(1.0, 3), DomainError);
  EXPECT_THROW(reg_inc_beta_derivative(0.5, 0), DomainError);
}

TEST(RegIncBetaDerivative, MatchesFiniteDifferencesAndIsPositive) {
  for (int d : {1, 3, 5, 11, 51})
    for (int i = 1; i <= 9; ++i) {
      const double z = i / 10.0;
      const double analytic = reg_inc_beta_derivative(z, d);
      EXPECT_GT(analytic, 0.0);
      const double fd = finite_difference(z, d, 1e-6);
      EXPECT_LE(std::fabs(fd - analytic), 1e-6 * analytic) << "d=" << d << " z=" << z;
    }
}

}  // namespace
}  // namespace prgd::specfn
