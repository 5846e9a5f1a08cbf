#pragma once

// Perturbed stochastic gradient descent over an empirical risk
// L(w) = (1/N) sum_i loss(w; x_i, y_i). Each step draws one record uniformly,
// optionally clips its gradient to norm G, adds noise drawn uniformly from the
// volume of a radius-R ball, and takes a step of size eta.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "prgd/accountant.hpp"
#include "prgd/errors.hpp"
#include "prgd/geometry.hpp"
#include "prgd/rng.hpp"

namespace prgd::optimizer {

using Vector = std::vector<double>;

struct Record {
  Vector features;
  double label = 0.0;
};

struct Dataset {
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }
  std::size_t feature_dim() const { return records.empty() ? 0 : records.front().features.size(); }

  void validate() const {
    if (records.empty()) throw DomainError("dataset must contain at least one record");
    const std::size_t dim = feature_dim();
    for (const Record& r : records)
      if (r.features.size() != dim)
        throw DomainError("all feature vectors must share one dimension");
  }
};

struct LossModel {
  std::string name;
  int parameter_dim = 0;
  std::function<double(std::span<const double>, const Record&)> value;
  std::function<Vector(std::span<const double>, const Record&)> gradient;
};

struct RunConfig {
  double step_size = 0.01;
  long long steps = 1;
  double noise_radius = 1.0;  // 0 disables the perturbation
  std::optional<double> clip_norm;
  std::uint64_t seed = 0;
  // Probe every k-th visited iterate when estimating the sensitivity.
  std::size_t sensitivity_stride = 1;
};

struct StepRecord {
  std::size_t step = 0;        // 1-based iteration index t
  std::size_t data_index = 0;  // record sampled at this step
  Vector iterate;              // w_t after the update
  Vector gradient;             // per-example gradient after clipping
  Vector noise;
  double grad_norm = 0.0;
  double noise_norm = 0.0;
  double loss = 0.0;  // full-data L(w_t)
};

struct RunTrace {
  Vector initial;
  double initial_loss = 0.0;
  std::vector<StepRecord> steps;
  Vector final_iterate;
  double sensitivity = 0.0;
  accountant::DeltaReport report;
};

inline double full_loss(const Dataset& data, const LossModel& model, std::span<const double> w) {
  double sum = 0.0;
  for (const Record& r : data.records) sum += model.value(w, r);
  return sum / static_cast<double>(data.size());
}

namespace detail {

inline void clip(Vector& g, double max_norm) {
  const double n = geometry::norm(g);
  if (!(n > max_norm)) return;
  const Vector raw = g;
  double scale = max_norm / n;
  for (;;) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = raw[k] * scale;
    if (geometry::norm(g) <= max_norm) return;
    scale = std::nextafter(scale, 0.0);  // rounding pushed the norm past G
  }
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace detail

// Brute-force max over probe points w and record pairs (i, j) of
// ||grad_i(w) - grad_j(w)||. With a clipping norm G the result is capped at 2G.
inline double estimate_sensitivity(const Dataset& data, const LossModel& model,
                                   std::span<const Vector> w_list,
                                   std::optional<double> clip_norm = std::nullopt) {
  if (w_list.empty()) throw DomainError("estimate_sensitivity needs at least one probe point");
  double best = 0.0;
  std::vector<Vector> grads(data.size());
  for (const Vector& w : w_list) {
    for (std::size_t i = 0; i < data.size(); ++i) grads[i] = model.gradient(w, data.records[i]);
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (std::size_t j = i + 1; j < grads.size(); ++j) {
        double sq = 0.0;
        for (std::size_t k = 0; k < grads[i].size(); ++k) {
          const double diff = grads[i][k] - grads[j][k];
          sq += diff * diff;
        }
        best = std::max(best, std::sqrt(sq));
      }
  }
  if (clip_norm) best = std::min(best, 2.0 * *clip_norm);
  return best;
}

// Accounting for a finished run. A zero noise radius is a deterministic
// mechanism: delta is 0 when the sensitivity is 0 and 1 otherwise.
inline accountant::DeltaReport account_run(int d, double sensitivity, std::size_t n,
                                           long long steps, double radius,
                                           std::string provenance) {
  if (radius > 0.0)
    return accountant::overall_delta(
        {d, sensitivity, static_cast<long long>(n), steps, radius}, std::move(provenance));
  accountant::DeltaReport r;
  r.per_step_delta = sensitivity > 0.0 ? 1.0 : 0.0;
  r.amplified_delta = r.per_step_delta / static_cast<double>(n);
  const double composed = static_cast<double>(steps) * r.amplified_delta;
  r.saturated = composed > 1.0;
  r.overall_delta = std::min(1.0, composed);
  r.provenance = std::move(provenance);
  return r;
}

inline RunTrace prgd_run(const Dataset& data, const LossModel& model, const RunConfig& config,
                         Vector w0) {
  data.validate();
  if (model.parameter_dim < 1) throw DomainError("loss model parameter_dim must be >= 1");
  if (static_cast<int>(w0.size()) != model.parameter_dim)
    throw DomainError("initial iterate has " + std::to_string(w0.size()) +
                      " components, loss model expects " + std::to_string(model.parameter_dim));
  if (!(config.step_size > 0.0)) throw DomainError("step size must be positive");
  if (config.steps < 1) throw DomainError("steps T must be >= 1");
  if (!(config.noise_radius >= 0.0) || !std::isfinite(config.noise_radius))
    throw DomainError("noise radius must be finite and nonnegative");
  if (config.clip_norm && !(*config.clip_norm > 0.0))
    throw DomainError("clip norm must be positive");
  if (config.sensitivity_stride < 1) throw DomainError("sensitivity stride must be >= 1");

  const int d = model.parameter_dim;
  Rng index_rng(config.seed, 0);
  Rng noise_rng(config.seed, 1);

  RunTrace trace;
  trace.initial = w0;
  trace.initial_loss = full_loss(data, model, w0);
  if (!std::isfinite(trace.initial_loss)) throw NumericalError("non-finite loss", 0);
  trace.steps.reserve(static_cast<std::size_t>(config.steps));

  std::vector<Vector> probes;
  Vector w = std::move(w0);
  for (long long t = 1; t <= config.steps; ++t) {
    const auto step = static_cast<std::size_t>(t);
    if ((step - 1) % config.sensitivity_stride == 0) probes.push_back(w);

    StepRecord rec;
    rec.step = step;
    rec.data_index = static_cast<std::size_t>(index_rng.index(data.size()));
    rec.gradient = model.gradient(w, data.records[rec.data_index]);
    if (!detail::all_finite(rec.gradient)) throw NumericalError("non-finite gradient", step);
    if (config.clip_norm) detail::clip(rec.gradient, *config.clip_norm);
    rec.grad_norm = geometry::norm(rec.gradient);

    if (config.noise_radius > 0.0)
      rec.noise = geometry::sample_ball({d, config.noise_radius}, noise_rng);
    else
      rec.noise.assign(static_cast<std::size_t>(d), 0.0);
    rec.noise_norm = geometry::norm(rec.noise);

    for (int k = 0; k < d; ++k) w[k] = w[k] - config.step_size * (rec.gradient[k] + rec.noise[k]);
    if (!detail::all_finite(w)) throw NumericalError("non-finite iterate", step);
    rec.iterate = w;
    rec.loss = full_loss(data, model, w);
    if (!std::isfinite(rec.loss)) throw NumericalError("non-finite loss", step);
    trace.steps.push_back(std::move(rec));
  }
  trace.final_iterate = w;

  std::string provenance;
  if (config.clip_norm) {
    trace.sensitivity = 2.0 * *config.clip_norm;
    provenance = "certified";
  } else {
    trace.sensitivity = estimate_sensitivity(data, model, probes);
    provenance = "empirical";
  }
  trace.report = account_run(d, trace.sensitivity, data.size(), config.steps,
                             config.noise_radius, std::move(provenance));
  return trace;
}

// One line per iteration: step, data_index, loss, grad_norm, noise_norm,
// iterate components. Comma separated, 17 significant digits.
inline void write_trace(std::ostream& out, const RunTrace& trace) {
  char buf[64];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (const StepRecord& s : trace.steps) {
    out << s.step << ',' << s.data_index;
    put(s.loss);
    put(s.grad_norm);
    put(s.noise_norm);
    for (double x : s.iterate) put(x);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Built-in losses

inline LossModel least_squares_loss(int feature_dim) {
  return {"least_squares", feature_dim,
          [](std::span<const double> w, const Record& r) {
            double pred = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) pred += w[k] * r.features[k];
            const double res = r.label - pred;
            return res * res;
          },
          [](std::span<const double> w, const Record& r) {
            double pred = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) pred += w[k] * r.features[k];
            const double res = r.label - pred;
            Vector g(w.size());
            for (std::size_t k = 0; k < w.size(); ++k) g[k] = -2.0 * res * r.features[k];
            return g;
          }};
}

// (y - u v x)^2 with w = (u, v) and scalar x. The origin is a strict saddle
// of L whenever sum_i x_i y_i != 0.
inline LossModel scalar_factorization_loss() {
  return {"scalar_factorization", 2,
          [](std::span<const double> w, const Record& r) {
            const double res = r.label - w[0] * w[1] * r.features[0];
            return res * res;
          },
          [](std::span<const double> w, const Record& r) {
            const double x = r.features[0];
            const double res = r.label - w[0] * w[1] * x;
            return Vector{-2.0 * res * w[1] * x, -2.0 * res * w[0] * x};
          }};
}

// ||x x^T - w w^T||_F^2 per record, so L(w) is the rank-1 factorization loss
// of M = mean(x x^T) up to a constant. Labels are ignored; saddle at w = 0.
inline LossModel matrix_factorization_loss(int feature_dim) {
  return {"matrix_factorization", feature_dim,
          [](std::span<const double> w, const Record& r) {
            double sum = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
              for (std::size_t j = 0; j < w.size(); ++j) {
                const double e = r.features[i] * r.features[j] - w[i] * w[j];
                sum += e * e;
              }
            return sum;
          },
          [](std::span<const double> w, const Record& r) {
            // -4 (x x^T - w w^T) w
            double xw = 0.0, ww = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) {
              xw += r.features[k] * w[k];
              ww += w[k] * w[k];
            }
            Vector g(w.size());
            for (std::size_t k = 0; k < w.size(); ++k)
              g[k] = -4.0 * (r.features[k] * xw - w[k] * ww);
            return g;
          }};
}

// w^T x; the gradient is the feature vector itself.
inline LossModel linear_loss(int feature_dim) {
  return {"linear", feature_dim,
          [](std::span<const double> w, const Record& r) {
            double s = 0.0;
            for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * r.features[k];
            return s;
          },
          [](std::span<const double>, const Record& r) { return r.features; }};
}

inline std::vector<std::string> builtin_loss_names() {
  return {"least_squares", "scalar_factorization", "matrix_factorization", "linear"};
}

inline std::vector<LossModel> builtin_losses(int feature_dim) {
  std::vector<LossModel> out{least_squares_loss(feature_dim), matrix_factorization_loss(feature_dim),
                             linear_loss(feature_dim)};
  if (feature_dim == 1) out.insert(out.begin() + 1, scalar_factorization_loss());
  return out;
}

inline LossModel find_loss(const std::string& name, int feature_dim) {
  if (feature_dim < 1) throw DomainError("feature dimension must be >= 1");
  if (name == "scalar_factorization" && feature_dim != 1)
    throw DomainError("scalar_factorization requires feature dimension 1");
  for (LossModel& m : builtin_losses(feature_dim))
    if (m.name == name) return m;
  throw DomainError("unknown loss '" + name + "'");
}

// Synthetic records: x ~ N(0, I), y = sum(x) + label_noise * N(0, 1).
inline Dataset synthetic_dataset(std::size_t n, int feature_dim, double label_noise,
                                 std::uint64_t seed) {
  if (n < 1 || feature_dim < 1) throw DomainError("synthetic dataset needs N >= 1 and dim >= 1");
  Rng rng(seed, 0);
  Dataset data;
  data.records.resize(n);
  for (Record& r : data.records) {
    r.features.resize(static_cast<std::size_t>(feature_dim));
    double y = 0.0;
    for (double& x : r.features) {
      x = rng.normal();
      y += x;
    }
    r.label = y + label_noise * rng.normal();
  }
  return data;
}

// Least-squares minimizer from the normal equations (X^T X) w = X^T y,
// solved by Cholesky factorization.
inline Vector least_squares_optimum(const Dataset& data) {
  data.validate();
  const std::size_t p = data.feature_dim();
  std::vector<double> a(p * p, 0.0);
  Vector rhs(p, 0.0);
  for (const Record& r : data.records)
    for (std::size_t i = 0; i < p; ++i) {
      rhs[i] += r.features[i] * r.label;
      for (std::size_t j = 0; j < p; ++j) a[i * p + j] += r.features[i] * r.features[j];
    }
  for (std::size_t j = 0; j < p; ++j) {
    double diag = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * p + k] * a[j * p + k];
    if (!(diag > 0.0)) throw DomainError("normal equations are singular");
    a[j * p + j] = std::sqrt(diag);
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / a[j * p + j];
    }
  }
  Vector z(p);
  for (std::size_t i = 0; i < p; ++i) {
    double s = rhs[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * p + k] * z[k];
    z[i] = s / a[i * p + i];
  }
  Vector w(p);
  for (std::size_t i = p; i-- > 0;) {
    double s = z[i];
    for (std::size_t k = i + 1; k < p; ++k) s -= a[k * p + i] * w[k];
    w[i] = s / a[i * p + i];
  }
  return w;
}

}  // namespace prgd::optimizer
