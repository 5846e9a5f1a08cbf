// prgd: privacy accounting, delta curves, perturbed gradient descent runs and
// oracle validation from the command line.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "prgd/cli.hpp"

int main(int argc, char** argv) {
  using namespace prgd::cli;

  CLI::App app{"Perturbed gradient descent with uniform-ball noise and its (0, delta) privacy"};
  app.require_subcommand(1);

  AccountArgs account;
  auto* account_cmd = app.add_subcommand("account", "Per-step, amplified and composed delta");
  account_cmd->add_option("--d", account.d, "Gradient dimension")->required();
  account_cmd->add_option("--delta-x", account.delta_x, "Gradient-space sensitivity")->required();
  account_cmd->add_option("--n", account.n, "Dataset size N")->required();
  account_cmd->add_option("--t", account.t, "Number of steps T")->required();
  account_cmd->add_option("--radius", account.radius, "Noise ball radius")->capture_default_str();

  CurveArgs curve;
  auto* curve_cmd = app.add_subcommand("curve", "Write delta versus delta-x as CSV");
  curve_cmd->add_option("--d", curve.d_list, "Comma-separated dimensions, e.g. 1,3,7")->required();
  auto* range_opt = curve_cmd->add_option("--range", curve.range, "Delta-x grid start:stop:step");
  auto* points_opt = curve_cmd->add_option("--points", curve.points, "Comma-separated delta-x values");
  range_opt->excludes(points_opt);
  curve_cmd->add_option("--radius", curve.radius, "Noise ball radius")->capture_default_str();
  curve_cmd->add_option("--out", curve.out_path, "Output CSV path, '-' for stdout")->capture_default_str();

  std::string config_path;
  std::string trace_path;
  RunOverrides overrides;
  auto* run_cmd = app.add_subcommand("run", "Run perturbed gradient descent from a JSON config");
  run_cmd->add_option("config", config_path, "Experiment config file")->required();
  run_cmd->add_option("--trace", trace_path, "Trace output path")->required();
  run_cmd->add_option("--seed", overrides.seed, "Override run.seed");
  run_cmd->add_option("--steps", overrides.steps, "Override run.steps");
  run_cmd->add_option("--noise-radius", overrides.noise_radius, "Override run.noise_radius");

  ValidateArgs validate;
  auto* validate_cmd = app.add_subcommand("validate", "Check analytic results against oracles");
  validate_cmd->add_option("--suite", validate.suite, "tv, overlap, gradcheck, surface or all")
      ->capture_default_str();
  validate_cmd->add_option("--samples", validate.samples, "Monte Carlo samples per case")
      ->capture_default_str();
  validate_cmd->add_option("--seed", validate.seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*account_cmd) return cmd_account(account, std::cout, std::cerr);
    if (*curve_cmd) return cmd_curve(curve, std::cout, std::cerr);
    if (*run_cmd) return cmd_run(config_path, trace_path, overrides, std::cout, std::cerr);
    if (*validate_cmd) return cmd_validate(validate, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "prgd: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}
