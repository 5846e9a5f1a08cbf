#pragma once

// Ball geometry in d dimensions: volumes, cap volumes, the overlap of two
// equal balls, and uniform sampling from a ball's volume or its surface.

#include <cmath>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "prgd/errors.hpp"
#include "prgd/rng.hpp"
#include "prgd/specfn.hpp"

namespace prgd::geometry {

struct BallSpec {
  int d = 1;
  double radius = 1.0;
};

inline void validate(const BallSpec& spec) {
  if (spec.d < 1) throw DomainError("ball dimension must be >= 1, got " + std::to_string(spec.d));
  if (!(spec.radius > 0.0) || !std::isfinite(spec.radius))
    throw DomainError("ball radius must be positive, got " + std::to_string(spec.radius));
}

using NoiseSample = std::vector<double>;

inline double norm(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// radius^d * pi^{d/2} / Gamma(1 + d/2)
inline double ball_volume(const BallSpec& spec) {
  validate(spec);
  const double d = spec.d;
  return std::exp(d * std::log(spec.radius) + 0.5 * d * std::log(std::numbers::pi) -
                  specfn::log_gamma(1.0 + 0.5 * d));
}

// Volume of the cap cut off by a hyperplane at distance a*radius from the
// center: (1/2) V_d I_{1-a^2}((d+1)/2, 1/2).
inline double cap_volume(const BallSpec& spec, double a) {
  validate(spec);
  if (!(a >= 0.0 && a <= 1.0))
    throw DomainError("cap offset a must lie in [0,1], got " + std::to_string(a));
  return 0.5 * ball_volume(spec) *
         specfn::reg_inc_beta(1.0 - a * a, {0.5 * (spec.d + 1), 0.5});
}

// Intersection volume of two radius-r balls whose centers are delta_x apart.
inline double overlap_volume(const BallSpec& spec, double delta_x) {
  validate(spec);
  if (!(delta_x >= 0.0)) throw DomainError("delta_x must be nonnegative");
  if (delta_x >= 2.0 * spec.radius) return 0.0;
  return 2.0 * cap_volume(spec, delta_x / (2.0 * spec.radius));
}

// Uniform on the sphere of the given radius: normalized Gaussian direction.
template <class Gen>
NoiseSample sample_sphere_surface(const BallSpec& spec, Gen& rng) {
  validate(spec);
  NoiseSample v(static_cast<std::size_t>(spec.d));
  double n = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    n = norm(v);
  } while (n == 0.0);
  for (double& x : v) x = spec.radius * (x / n);
  return v;
}

// Uniform on the solid ball: a surface direction scaled by U^{1/d}.
template <class Gen>
NoiseSample sample_ball(const BallSpec& spec, Gen& rng) {
  NoiseSample v = sample_sphere_surface(BallSpec{spec.d, 1.0}, rng);
  const double r = spec.radius * std::pow(rng.uniform(), 1.0 / spec.d);
  for (double& x : v) x *= r;
  return v;
}

}  // namespace prgd::geometry
