#pragma once

// (0, delta) privacy accounting for gradient perturbation by uniform-ball
// noise: per-step delta from the overlap of two shifted balls, 1/N
// amplification from uniform record sampling, and additive composition over
// T steps.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "prgd/errors.hpp"
#include "prgd/specfn.hpp"

namespace prgd::accountant {

struct PrivacySpec {
  int d = 1;
  double delta_x = 0.0;      // gradient-space sensitivity
  long long dataset_size = 1;
  long long steps = 1;
  double noise_radius = 1.0;
};

struct DeltaReport {
  double per_step_delta = 0.0;
  double amplified_delta = 0.0;
  double overall_delta = 0.0;
  bool saturated = false;
  // How the sensitivity fed to the accountant was obtained: "given",
  // "certified" (clipping bound 2G) or "empirical" (probed gradients).
  std::string provenance = "given";
};

inline void validate(const PrivacySpec& s) {
  if (s.d < 1) throw DomainError("d must be >= 1");
  if (!(s.delta_x >= 0.0) || !std::isfinite(s.delta_x))
    throw DomainError("delta_x must be a finite nonnegative number");
  if (s.dataset_size < 1) throw DomainError("dataset size N must be >= 1");
  if (s.steps < 1) throw DomainError("steps T must be >= 1");
  if (!(s.noise_radius > 0.0) || !std::isfinite(s.noise_radius))
    throw DomainError("noise radius must be positive");
}

// Largest probability gap between the two noisy gradients:
// I_{s^2}(1/2, (d+1)/2) with s = delta_x / (2R), and 1 once the balls are
// disjoint.
inline double per_step_delta(int d, double delta_x, double radius = 1.0) {
  validate(PrivacySpec{d, delta_x, 1, 1, radius});
  const double s = delta_x / (2.0 * radius);
  if (s >= 1.0) return 1.0;
  return specfn::reg_inc_beta(s * s, {0.5, 0.5 * (d + 1)});
}

// 1 - delta evaluated directly, I_{1-s^2}((d+1)/2, 1/2). Keeps resolution
// where delta itself rounds to 1.
inline double per_step_overlap_fraction(int d, double delta_x, double radius = 1.0) {
  validate(PrivacySpec{d, delta_x, 1, 1, radius});
  const double s = delta_x / (2.0 * radius);
  if (s >= 1.0) return 0.0;
  return specfn::reg_inc_beta(1.0 - s * s, {0.5 * (d + 1), 0.5});
}

inline double per_step_delta(const PrivacySpec& spec) {
  validate(spec);
  return per_step_delta(spec.d, spec.delta_x, spec.noise_radius);
}

inline double amplified_delta(const PrivacySpec& spec) {
  return per_step_delta(spec) / static_cast<double>(spec.dataset_size);
}

inline DeltaReport overall_delta(const PrivacySpec& spec, std::string provenance = "given") {
  DeltaReport r;
  r.per_step_delta = per_step_delta(spec);
  r.amplified_delta = r.per_step_delta / static_cast<double>(spec.dataset_size);
  // T/N first so T == N gives back per_step_delta bit for bit.
  const double composed =
      r.per_step_delta * (static_cast<double>(spec.steps) / static_cast<double>(spec.dataset_size));
  r.saturated = composed > 1.0;
  r.overall_delta = r.saturated ? 1.0 : composed;
  r.provenance = std::move(provenance);
  return r;
}

// Noise radius R with per_step_delta(d, delta_x, R) == target. delta is
// continuous and strictly decreasing in R on (delta_x/2, inf), running from 1
// down to 0, so bisection on that interval always brackets the root.
inline double radius_for_target(int d, double delta_x, double target) {
  if (d < 1) throw DomainError("d must be >= 1");
  if (!(delta_x > 0.0) || !std::isfinite(delta_x)) throw DomainError("delta_x must be positive");
  if (!(target > 0.0 && target < 1.0)) throw DomainError("target delta must lie in (0,1)");

  const auto gap = [&](double r) { return per_step_delta(d, delta_x, r) - target; };
  double lo = 0.5 * delta_x;  // delta == 1 here
  double hi = delta_x;
  for (int i = 0; gap(hi) > 0.0; ++i) {
    if (i > 2000) throw ConvergenceError("radius_for_target failed to bracket the target");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 400 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (gap(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  const double r = 0.5 * (lo + hi);
  if (!(std::fabs(gap(r)) <= 1e-10))
    throw ConvergenceError("radius_for_target did not reach the 1e-10 tolerance");
  return r;
}

struct CurveRow {
  int d;
  double delta_x;
  double delta;
};

// One row per (d, delta_x) pair, d-major in input order.
inline std::vector<CurveRow> delta_curve(std::span<const int> d_list,
                                         std::span<const double> delta_x_grid,
                                         double radius = 1.0) {
  if (d_list.empty() || delta_x_grid.empty())
    throw DomainError("delta_curve needs a nonempty dimension list and grid");
  std::vector<CurveRow> rows;
  rows.reserve(d_list.size() * delta_x_grid.size());
  for (int d : d_list)
    for (double dx : delta_x_grid) rows.push_back({d, dx, per_step_delta(d, dx, radius)});
  return rows;
}

}  // namespace prgd::accountant
