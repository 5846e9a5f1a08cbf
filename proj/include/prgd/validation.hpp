#pragma once

// Independent oracles for the analytic privacy results: Monte Carlo total
// variation between two shifted uniform balls, closed-form overlap volumes
// in d <= 3, finite-difference gradient checks, the surface-noise
// distinguishing attack, and an empirical second-moment (isotropy) check.
//
// Monte Carlo work is split into fixed-size chunks; chunk c draws from
// Rng(seed, c). The worker count only decides which thread runs which chunk,
// so results are identical for any number of workers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "prgd/errors.hpp"
#include "prgd/geometry.hpp"
#include "prgd/optimizer.hpp"
#include "prgd/rng.hpp"

namespace prgd::validation {

struct MCEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

// |estimate - expected| <= k standard errors. A proportion estimate of exactly
// 0 or 1 has a zero plug-in error, so there the binomial error at the expected
// value is used instead.
inline bool within_standard_errors(const MCEstimate& est, double expected, double k = 3.0) {
  double se = est.standard_error;
  if (se == 0.0 && est.samples > 0 && expected >= 0.0 && expected <= 1.0)
    se = std::sqrt(expected * (1.0 - expected) / static_cast<double>(est.samples));
  return std::fabs(est.value - expected) <= k * se;
}

inline constexpr std::uint64_t kChunkSize = 1u << 16;
inline constexpr const char* kWorkersEnv = "PRGD_WORKERS";

// Worker count from PRGD_WORKERS; 1 when unset or unparsable.
inline unsigned workers_from_env() {
  const char* v = std::getenv(kWorkersEnv);
  if (v == nullptr) return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) return 1;
  return static_cast<unsigned>(std::min<long>(n, 256));
}

namespace detail {

// Runs chunk_fn(chunk_index, chunk_samples) -> count over all chunks and sums
// the counts. The sum is over integers, so order does not matter.
template <class ChunkFn>
std::uint64_t count_chunked(std::uint64_t samples, unsigned workers, ChunkFn chunk_fn) {
  const std::uint64_t chunks = (samples + kChunkSize - 1) / kChunkSize;
  const auto chunk_samples = [&](std::uint64_t c) {
    return std::min(kChunkSize, samples - c * kChunkSize);
  };
  workers = std::max(1u, static_cast<unsigned>(std::min<std::uint64_t>(workers, chunks)));
  if (workers <= 1) {
    std::uint64_t total = 0;
    for (std::uint64_t c = 0; c < chunks; ++c) total += chunk_fn(c, chunk_samples(c));
    return total;
  }
  std::vector<std::uint64_t> partial(workers, 0);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::uint64_t c = w; c < chunks; c += workers)
          partial[w] += chunk_fn(c, chunk_samples(c));
      });
  }
  std::uint64_t total = 0;
  for (std::uint64_t p : partial) total += p;
  return total;
}

inline MCEstimate proportion(std::uint64_t hits, std::uint64_t samples, std::uint64_t seed) {
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(samples)), samples, seed};
}

}  // namespace detail

// Total variation between Uniform(B(0, r)) and Uniform(B(delta_x e1, r)),
// estimated as the fraction of draws from the first ball that fall outside
// the second.
inline MCEstimate mc_tv_distance(int d, double delta_x, double radius, std::uint64_t samples,
                                 std::uint64_t seed, unsigned workers = 1) {
  geometry::validate({d, radius});
  if (!(delta_x >= 0.0)) throw DomainError("delta_x must be nonnegative");
  if (samples < 1) throw DomainError("samples must be >= 1");
  const geometry::BallSpec spec{d, radius};
  const double r2 = radius * radius;
  const std::uint64_t outside =
      detail::count_chunked(samples, workers, [&](std::uint64_t chunk, std::uint64_t n) {
        Rng rng(seed, chunk);
        std::uint64_t count = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
          const geometry::NoiseSample p = geometry::sample_ball(spec, rng);
          double dist2 = (p[0] - delta_x) * (p[0] - delta_x);
          for (std::size_t k = 1; k < p.size(); ++k) dist2 += p[k] * p[k];
          if (dist2 > r2) ++count;
        }
        return count;
      });
  return detail::proportion(outside, samples, seed);
}

struct OverlapPair {
  double analytic;
  double closed_form;
};

// Library overlap volume next to the elementary formula for d in {1,2,3}:
// interval, circular lens, and twice a spherical cap.
inline OverlapPair closed_form_overlap_check(int d, double delta_x, double radius = 1.0) {
  if (d < 1 || d > 3) throw DomainError("closed-form overlap is only available for d in {1,2,3}");
  if (!(delta_x >= 0.0 && delta_x <= 2.0 * radius))
    throw DomainError("delta_x must lie in [0, 2r]");
  const double r = radius;
  double closed = 0.0;
  switch (d) {
    case 1:
      closed = 2.0 * r - delta_x;
      break;
    case 2:
      closed = 2.0 * r * r * std::acos(delta_x / (2.0 * r)) -
               0.5 * delta_x * std::sqrt(std::max(0.0, 4.0 * r * r - delta_x * delta_x));
      break;
    default: {
      const double h = r - delta_x / 2.0;
      closed = 2.0 * std::numbers::pi * h * h * (3.0 * r - h) / 3.0;
    }
  }
  return {geometry::overlap_volume({d, r}, delta_x), closed};
}

// Max over components of |fd - g| / max(1, |g|), where fd is the central
// difference of the per-example value.
inline double grad_check(const optimizer::LossModel& model, std::span<const double> w,
                         const optimizer::Record& record, double step) {
  if (!(step > 0.0 && step <= 1e-3)) throw DomainError("grad_check step must lie in (0, 1e-3]");
  const optimizer::Vector g = model.gradient(w, record);
  optimizer::Vector probe(w.begin(), w.end());
  double worst = 0.0;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const double orig = probe[k];
    probe[k] = orig + step;
    const double up = model.value(probe, record);
    probe[k] = orig - step;
    const double down = model.value(probe, record);
    probe[k] = orig;
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, std::fabs(fd - g[k]) / std::max(1.0, std::fabs(g[k])));
  }
  return worst;
}

enum class NoiseKind { Surface, Volume };

inline constexpr double kDistanceTolerance = 1e-9;

// Two neighbouring outputs: center 0 or center delta_x e1 (chosen by a fair
// coin) plus unit noise. The adversary attributes each output to the center
// whose noise support contains it (distance exactly 1 for surface noise,
// distance <= 1 for volume noise) and guesses uniformly when both or neither
// qualify. Returns the fraction of correct attributions.
inline MCEstimate surface_noise_distinguisher(int d, double delta_x, std::uint64_t samples,
                                              std::uint64_t seed,
                                              NoiseKind kind = NoiseKind::Surface,
                                              unsigned workers = 1) {
  if (d < 1) throw DomainError("d must be >= 1");
  if (!(delta_x > 0.0 && delta_x < 2.0)) throw DomainError("delta_x must lie in (0,2)");
  if (samples < 1) throw DomainError("samples must be >= 1");
  const geometry::BallSpec unit{d, 1.0};
  const auto in_support = [kind](double dist) {
    return kind == NoiseKind::Surface ? std::fabs(dist - 1.0) <= kDistanceTolerance
                                      : dist <= 1.0;
  };
  const std::uint64_t correct =
      detail::count_chunked(samples, workers, [&](std::uint64_t chunk, std::uint64_t n) {
        Rng rng(seed, chunk);
        std::uint64_t count = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
          const bool source = rng.uniform() < 0.5;
          geometry::NoiseSample out = kind == NoiseKind::Surface
                                          ? geometry::sample_sphere_surface(unit, rng)
                                          : geometry::sample_ball(unit, rng);
          if (source) out[0] += delta_x;
          const double d0 = geometry::norm(out);
          out[0] -= delta_x;
          const double d1 = geometry::norm(out);
          const bool match0 = in_support(d0);
          const bool match1 = in_support(d1);
          bool guess;
          if (match0 != match1)
            guess = match1;
          else
            guess = rng.uniform() < 0.5;
          if (guess == source) ++count;
        }
        return count;
      });
  return detail::proportion(correct, samples, seed);
}

struct SecondMoments {
  int d = 0;
  std::uint64_t samples = 0;
  std::vector<double> mean;            // d x d, row-major: mean of n_i n_j
  std::vector<double> standard_error;  // d x d
  double max_norm = 0.0;
};

// Empirical E[n n^T] of uniform-ball draws with per-entry standard errors.
// The expectation for the uniform ball is r^2 / (d + 2) times the identity.
inline SecondMoments second_moments(int d, double radius, std::uint64_t samples,
                                    std::uint64_t seed) {
  geometry::validate({d, radius});
  if (samples < 2) throw DomainError("second_moments needs at least two samples");
  const auto dd = static_cast<std::size_t>(d);
  std::vector<double> sum(dd * dd, 0.0), sum_sq(dd * dd, 0.0);
  SecondMoments out;
  out.d = d;
  out.samples = samples;
  for (std::uint64_t c = 0; c * kChunkSize < samples; ++c) {
    Rng rng(seed, c);
    const std::uint64_t n = std::min(kChunkSize, samples - c * kChunkSize);
    for (std::uint64_t i = 0; i < n; ++i) {
      const geometry::NoiseSample v = geometry::sample_ball({d, radius}, rng);
      out.max_norm = std::max(out.max_norm, geometry::norm(v));
      for (std::size_t a = 0; a < dd; ++a)
        for (std::size_t b = 0; b < dd; ++b) {
          const double x = v[a] * v[b];
          sum[a * dd + b] += x;
          sum_sq[a * dd + b] += x * x;
        }
    }
  }
  const double n = static_cast<double>(samples);
  out.mean.resize(dd * dd);
  out.standard_error.resize(dd * dd);
  for (std::size_t k = 0; k < dd * dd; ++k) {
    const double m = sum[k] / n;
    const double var = std::max(0.0, (sum_sq[k] / n - m * m) * n / (n - 1.0));
    out.mean[k] = m;
    out.standard_error[k] = std::sqrt(var / n);
  }
  return out;
}

}  // namespace prgd::validation
