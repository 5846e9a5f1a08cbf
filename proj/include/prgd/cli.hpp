#pragma once

// Command implementations behind the `prgd` executable. Each command writes
// to caller-supplied streams and returns a process exit code, so the same
// code is driven by the executable and by the tests.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "prgd/accountant.hpp"
#include "prgd/errors.hpp"
#include "prgd/geometry.hpp"
#include "prgd/optimizer.hpp"
#include "prgd/validation.hpp"

namespace prgd::cli {

enum ExitCode : int { kSuccess = 0, kValidationFailure = 1, kUsageError = 2 };

// Invalid flags, configuration or input files.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_sig12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline double parse_double(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw UsageError("invalid number for " + what + ": '" + text + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) parts.push_back(item);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

// ---------------------------------------------------------------------------
// account

struct AccountArgs {
  int d = 1;
  double delta_x = 0.0;
  long long n = 1;
  long long t = 1;
  double radius = 1.0;
};

inline void write_report(std::ostream& out, const accountant::DeltaReport& r) {
  out << "per_step_delta: " << format_double(r.per_step_delta) << '\n'
      << "amplified_delta: " << format_double(r.amplified_delta) << '\n'
      << "overall_delta: " << format_double(r.overall_delta) << '\n'
      << "saturated: " << (r.saturated ? "true" : "false") << '\n';
}

inline int cmd_account(const AccountArgs& args, std::ostream& out, std::ostream& err) {
  const accountant::PrivacySpec spec{args.d, args.delta_x, args.n, args.t, args.radius};
  try {
    accountant::validate(spec);
  } catch (const DomainError& e) {
    err << "account: " << e.what() << '\n';
    return kUsageError;
  }
  if (args.delta_x >= 2.0 * args.radius) {
    err << "account: delta-x (" << format_double(args.delta_x) << ") >= 2 * radius ("
        << format_double(2.0 * args.radius)
        << "); the noise balls are disjoint and delta saturates at 1\n";
    return kUsageError;
  }
  write_report(out, accountant::overall_delta(spec));
  return kSuccess;
}

// ---------------------------------------------------------------------------
// curve

inline std::vector<int> parse_dimensions(const std::string& text) {
  std::vector<int> dims;
  for (const std::string& item : split(text, ',')) {
    int v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || v < 1)
      throw UsageError("invalid dimension '" + item + "' in d-list");
    dims.push_back(v);
  }
  if (dims.empty()) throw UsageError("d-list must not be empty");
  return dims;
}

// "start:stop:step" -> start, start+step, ..., stop (inclusive within 1e-9
// of a step). Points are snapped to their 12-digit decimal so the value
// written to a CSV is the value that was evaluated.
inline std::vector<double> parse_range(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 3) throw UsageError("range must be start:stop:step, got '" + text + "'");
  const double start = parse_double(parts[0], "range start");
  const double stop = parse_double(parts[1], "range stop");
  const double step = parse_double(parts[2], "range step");
  if (!(step > 0.0)) throw UsageError("range step must be positive");
  if (!(stop >= start)) throw UsageError("range stop must be >= start");
  const auto count = static_cast<long long>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 10'000'000) throw UsageError("range has too many points");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i)
    grid.push_back(std::strtod(format_sig12(start + static_cast<double>(i) * step).c_str(), nullptr));
  if (std::fabs(grid.back() - stop) <= 1e-9 * step) grid.back() = stop;
  return grid;
}

inline std::vector<double> parse_points(const std::string& text) {
  std::vector<double> pts;
  for (const std::string& item : split(text, ',')) pts.push_back(parse_double(item, "point"));
  if (pts.empty()) throw UsageError("point list must not be empty");
  return pts;
}

inline void write_curve_csv(std::ostream& out, const std::vector<accountant::CurveRow>& rows) {
  out << "d,delta_x,delta\n";
  for (const auto& r : rows)
    out << r.d << ',' << format_sig12(r.delta_x) << ',' << format_sig12(r.delta) << '\n';
}

struct CurveArgs {
  std::string d_list;
  std::optional<std::string> range;
  std::optional<std::string> points;
  double radius = 1.0;
  std::string out_path = "-";
};

inline int cmd_curve(const CurveArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<accountant::CurveRow> rows;
  try {
    const std::vector<int> dims = parse_dimensions(args.d_list);
    if (args.range.has_value() == args.points.has_value())
      throw UsageError("exactly one of --range or --points is required");
    if (!(args.radius > 0.0)) throw UsageError("radius must be positive");
    const std::vector<double> grid = args.range ? parse_range(*args.range) : parse_points(*args.points);
    for (double x : grid)
      if (!(x >= 0.0 && x <= 2.0 * args.radius))
        throw UsageError("delta-x value " + format_double(x) + " is outside [0, 2*radius]");
    rows = accountant::delta_curve(dims, grid, args.radius);
  } catch (const UsageError& e) {
    err << "curve: " << e.what() << '\n';
    return kUsageError;
  }

  if (args.out_path == "-") {
    write_curve_csv(out, rows);
    return kSuccess;
  }
  std::ofstream file(args.out_path, std::ios::binary);
  if (!file) {
    err << "curve: cannot open output file " << args.out_path << '\n';
    return kUsageError;
  }
  write_curve_csv(file, rows);
  file.close();
  if (!file) {
    err << "curve: failed writing " << args.out_path << '\n';
    return kUsageError;
  }
  out << "wrote " << rows.size() << " rows to " << args.out_path << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------------------
// run

struct ExperimentConfig {
  std::string loss;
  std::size_t n = 0;
  int feature_dim = 0;
  double label_noise = 0.0;
  std::uint64_t data_seed = 0;
  optimizer::RunConfig run;
  std::optional<optimizer::Vector> init;  // nullopt: origin
};

namespace detail {

inline std::string field_name(const char* section, const char* key) {
  return *section ? std::string(section) + "." + key : std::string(key);
}

inline const nlohmann::json& field(const nlohmann::json& obj, const char* section, const char* key) {
  if (!obj.is_object())
    throw UsageError(std::string("config section '") + section + "' must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw UsageError("config is missing field " + field_name(section, key));
  return *it;
}

template <class T>
T get(const nlohmann::json& obj, const char* section, const char* key) {
  const nlohmann::json& v = field(obj, section, key);
  try {
    if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw UsageError("");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) throw UsageError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw UsageError("");
    } else {
      if (!v.is_string()) throw UsageError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw UsageError("config field " + field_name(section, key) + " has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  ExperimentConfig c;
  c.loss = detail::get<std::string>(j, "", "loss");

  const nlohmann::json& data = detail::field(j, "", "data");
  const auto n = detail::get<long long>(data, "data", "n");
  if (n < 1) throw UsageError("config field data.n must be >= 1");
  c.n = static_cast<std::size_t>(n);
  c.feature_dim = detail::get<int>(data, "data", "feature_dim");
  if (c.feature_dim < 1) throw UsageError("config field data.feature_dim must be >= 1");
  c.label_noise = detail::get<double>(data, "data", "label_noise");
  if (!(c.label_noise >= 0.0)) throw UsageError("config field data.label_noise must be >= 0");
  c.data_seed = detail::get<std::uint64_t>(data, "data", "seed");

  const nlohmann::json& run = detail::field(j, "", "run");
  c.run.step_size = detail::get<double>(run, "run", "step_size");
  if (!(c.run.step_size > 0.0)) throw UsageError("config field run.step_size must be > 0");
  c.run.steps = detail::get<long long>(run, "run", "steps");
  if (c.run.steps < 1) throw UsageError("config field run.steps must be >= 1");
  c.run.noise_radius = detail::get<double>(run, "run", "noise_radius");
  if (!(c.run.noise_radius >= 0.0)) throw UsageError("config field run.noise_radius must be >= 0");
  c.run.seed = detail::get<std::uint64_t>(run, "run", "seed");
  if (const auto it = run.find("clip_norm"); it != run.end() && !it->is_null()) {
    const double g = detail::get<double>(run, "run", "clip_norm");
    if (!(g > 0.0)) throw UsageError("config field run.clip_norm must be > 0");
    c.run.clip_norm = g;
  }
  const nlohmann::json& init = detail::field(run, "run", "init");
  if (init.is_string() && init.get<std::string>() == "origin") {
    c.init.reset();
  } else if (init.is_array()) {
    optimizer::Vector w;
    for (const auto& x : init) {
      if (!x.is_number()) throw UsageError("config field run.init must hold numbers");
      w.push_back(x.get<double>());
    }
    c.init = std::move(w);
  } else {
    throw UsageError("config field run.init must be \"origin\" or an array of numbers");
  }

  const nlohmann::json& acct = detail::field(j, "", "accountant");
  const auto stride = detail::get<long long>(acct, "accountant", "sensitivity_stride");
  if (stride < 1) throw UsageError("config field accountant.sensitivity_stride must be >= 1");
  c.run.sensitivity_stride = static_cast<std::size_t>(stride);

  bool known = false;
  for (const auto& name : optimizer::builtin_loss_names()) known = known || name == c.loss;
  if (!known) throw UsageError("config field loss names unknown loss '" + c.loss + "'");
  if (c.loss == "scalar_factorization" && c.feature_dim != 1)
    throw UsageError("config field data.feature_dim must be 1 for scalar_factorization");
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<long long> steps;
  std::optional<double> noise_radius;
};

inline int cmd_run(const std::string& config_path, const std::string& trace_path,
                   const RunOverrides& overrides, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (overrides.seed) cfg.run.seed = *overrides.seed;
    if (overrides.steps) {
      if (*overrides.steps < 1) throw UsageError("--steps must be >= 1");
      cfg.run.steps = *overrides.steps;
    }
    if (overrides.noise_radius) {
      if (!(*overrides.noise_radius >= 0.0)) throw UsageError("--noise-radius must be >= 0");
      cfg.run.noise_radius = *overrides.noise_radius;
    }
  } catch (const UsageError& e) {
    err << "run: " << e.what() << '\n';
    return kUsageError;
  }

  const optimizer::Dataset data =
      optimizer::synthetic_dataset(cfg.n, cfg.feature_dim, cfg.label_noise, cfg.data_seed);
  const optimizer::LossModel model = optimizer::find_loss(cfg.loss, cfg.feature_dim);
  optimizer::Vector w0 = cfg.init.value_or(optimizer::Vector(static_cast<std::size_t>(model.parameter_dim), 0.0));
  if (static_cast<int>(w0.size()) != model.parameter_dim) {
    err << "run: config field run.init has " << w0.size() << " components, loss '" << cfg.loss
        << "' expects " << model.parameter_dim << '\n';
    return kUsageError;
  }

  optimizer::RunTrace trace;
  try {
    trace = optimizer::prgd_run(data, model, cfg.run, w0);
  } catch (const NumericalError& e) {
    err << "run: diverged: " << e.what() << '\n';
    return kValidationFailure;
  }

  std::ofstream file(trace_path, std::ios::binary);
  if (!file) {
    err << "run: cannot open trace file " << trace_path << '\n';
    return kUsageError;
  }
  optimizer::write_trace(file, trace);
  file.close();
  if (!file) {
    err << "run: failed writing " << trace_path << '\n';
    return kUsageError;
  }

  double displacement = 0.0;
  for (std::size_t k = 0; k < w0.size(); ++k) {
    const double diff = trace.final_iterate[k] - w0[k];
    displacement += diff * diff;
  }
  out << "loss: " << cfg.loss << '\n'
      << "steps: " << cfg.run.steps << '\n'
      << "initial_loss: " << format_double(trace.initial_loss) << '\n'
      << "final_loss: " << format_double(trace.steps.back().loss) << '\n'
      << "displacement: " << format_double(std::sqrt(displacement)) << '\n';
  if (cfg.loss == "least_squares") {
    const optimizer::Vector opt = optimizer::least_squares_optimum(data);
    out << "optimum_loss: " << format_double(optimizer::full_loss(data, model, opt)) << '\n';
  }
  out << "sensitivity: " << format_double(trace.sensitivity) << '\n'
      << "provenance: " << trace.report.provenance << '\n';
  write_report(out, trace.report);
  out << "trace: " << trace_path << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------------------
// validate

struct CaseResult {
  std::string suite;
  std::string label;
  double analytic = 0.0;
  double estimate = 0.0;
  double standard_error = 0.0;
  bool pass = false;
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"tv", "overlap", "gradcheck", "surface", "all"};
  return names;
}

inline std::vector<CaseResult> run_tv_suite(std::uint64_t samples, std::uint64_t seed,
                                            unsigned workers) {
  std::vector<CaseResult> out;
  for (int d : {1, 2, 3, 5, 11, 21})
    for (double dx : {0.2, 0.6, 1.0, 1.4, 1.8}) {
      const double analytic = accountant::per_step_delta(d, dx, 1.0);
      const auto est = validation::mc_tv_distance(d, dx, 1.0, samples, seed, workers);
      CaseResult r{"tv", "d=" + std::to_string(d) + " delta_x=" + format_sig12(dx), analytic,
                   est.value, est.standard_error, false};
      r.pass = validation::within_standard_errors(est, analytic);
      out.push_back(std::move(r));
    }
  return out;
}

inline std::vector<CaseResult> run_overlap_suite() {
  std::vector<CaseResult> out;
  constexpr int kPoints = 100;
  for (int d = 1; d <= 3; ++d)
    for (int i = 0; i < kPoints; ++i) {
      const double dx = 2.0 * i / (kPoints - 1);
      const auto pair = validation::closed_form_overlap_check(d, dx);
      const double scale = std::max(std::fabs(pair.analytic), std::fabs(pair.closed_form));
      const double diff = std::fabs(pair.analytic - pair.closed_form);
      CaseResult r{"overlap", "d=" + std::to_string(d) + " delta_x=" + format_sig12(dx),
                   pair.closed_form, pair.analytic, 0.0, false};
      r.pass = scale == 0.0 ? true : diff <= 1e-10 * scale || diff <= 1e-14;
      out.push_back(std::move(r));
    }
  return out;
}

inline std::vector<CaseResult> run_gradcheck_suite(std::uint64_t seed) {
  constexpr double kStep = 1e-6;
  constexpr double kTolerance = 1e-5;
  std::vector<CaseResult> out;
  Rng rng(seed, 0);
  for (int dim : {1, 3, 5}) {
    const optimizer::Dataset data = optimizer::synthetic_dataset(4, dim, 0.1, seed + dim);
    for (const optimizer::LossModel& model : optimizer::builtin_losses(dim)) {
      for (int trial = 0; trial < 3; ++trial) {
        optimizer::Vector w(static_cast<std::size_t>(model.parameter_dim));
        for (double& x : w) x = trial == 0 ? 0.0 : rng.normal();
        const auto& rec = data.records[static_cast<std::size_t>(trial) % data.size()];
        const double dev = validation::grad_check(model, w, rec, kStep);
        CaseResult r{"gradcheck",
                     model.name + " dim=" + std::to_string(dim) +
                         (trial == 0 ? " w=origin" : " w=random" + std::to_string(trial)),
                     0.0, dev, 0.0, dev <= kTolerance};
        out.push_back(std::move(r));
      }
    }
  }
  return out;
}

inline std::vector<CaseResult> run_surface_suite(std::uint64_t samples, std::uint64_t seed,
                                                 unsigned workers) {
  std::vector<CaseResult> out;
  for (int d : {2, 3})
    for (double dx : {0.5, 1.0}) {
      const std::string label = "d=" + std::to_string(d) + " delta_x=" + format_sig12(dx);
      const auto surface = validation::surface_noise_distinguisher(
          d, dx, samples, seed, validation::NoiseKind::Surface, workers);
      out.push_back({"surface", label + " noise=surface", 1.0, surface.value,
                     surface.standard_error, surface.value >= 0.9999});
      const double delta = accountant::per_step_delta(d, dx, 1.0);
      const double expected = delta + (1.0 - delta) / 2.0;
      const auto volume = validation::surface_noise_distinguisher(
          d, dx, samples, seed, validation::NoiseKind::Volume, workers);
      out.push_back({"surface", label + " noise=volume", expected, volume.value,
                     volume.standard_error,
                     volume.value < 1.0 &&
                         std::fabs(volume.value - expected) <= 3.0 * volume.standard_error});
    }
  return out;
}

struct ValidateArgs {
  std::string suite = "all";
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 7;
};

inline int cmd_validate(const ValidateArgs& args, std::ostream& out, std::ostream& err) {
  bool known = false;
  for (const auto& s : suite_names()) known = known || s == args.suite;
  if (!known) {
    err << "validate: unknown suite '" << args.suite << "' (expected tv, overlap, gradcheck, surface or all)\n";
    return kUsageError;
  }
  if (args.samples < 1) {
    err << "validate: --samples must be >= 1\n";
    return kUsageError;
  }
  const unsigned workers = validation::workers_from_env();
  const bool all = args.suite == "all";
  std::vector<CaseResult> results;
  const auto append = [&](std::vector<CaseResult> more) {
    for (auto& r : more) results.push_back(std::move(r));
  };
  if (all || args.suite == "tv") append(run_tv_suite(args.samples, args.seed, workers));
  if (all || args.suite == "overlap") append(run_overlap_suite());
  if (all || args.suite == "gradcheck") append(run_gradcheck_suite(args.seed));
  if (all || args.suite == "surface") append(run_surface_suite(args.samples, args.seed, workers));

  std::size_t failed = 0;
  char line[512];
  for (const CaseResult& r : results) {
    std::snprintf(line, sizeof line, "%-9s %-44s analytic=%.12g estimate=%.12g se=%.3g %s\n",
                  r.suite.c_str(), r.label.c_str(), r.analytic, r.estimate, r.standard_error,
                  r.pass ? "PASS" : "FAIL");
    out << line;
    if (!r.pass) ++failed;
  }
  out << results.size() - failed << "/" << results.size() << " cases passed\n";
  return failed == 0 ? kSuccess : kValidationFailure;
}

}  // namespace prgd::cli
