// nestopt: run experiments, sweeps and the diagnostics suite.
//
//   nestopt run --config exp.cfg [--jobs K] [--out DIR]
//   nestopt check
//   nestopt sweep --n 100,1000,10000 --seeds 20 [--config exp.cfg]
//
// The default output directory comes from NESTOPT_OUTPUT_DIR.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>

#include "nestopt/harness/checks.hpp"
#include "nestopt/harness/config.hpp"
#include "nestopt/harness/experiment.hpp"

namespace h = nestopt::harness;

namespace {

int report(const h::ExperimentConfig& config, const h::ExperimentResult& result) {
  std::printf("%10s %6s %14s %14s %14s\n", "N", "count", "mean_V", "stderr_V", "mean_g_gap");
  const bool averaged = config.estimator == "averaged";
  for (const auto& a : result.aggregates) {
    std::printf("%10ld %6ld %14.6e %14.6e %14.6e\n", a.N, a.count,
                averaged ? a.mean_V_avg : a.mean_V, averaged ? a.stderr_V_avg : a.stderr_V,
                averaged ? a.mean_g_gap_sq_avg : a.mean_g_gap_sq);
  }
  if (result.slope) std::printf("slope %.4f (%s estimator)\n", *result.slope, config.estimator.c_str());
  long failed = 0;
  for (const auto& r : result.rows) {
    if (!r.ok) {
      ++failed;
      std::fprintf(stderr, "cell N=%ld seed=%llu failed: %s\n", r.N,
                   static_cast<unsigned long long>(r.seed), r.error.c_str());
    }
  }
  std::printf("%zu cells, %ld failed\n", result.rows.size(), failed);
  return result.all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nested stochastic approximation experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Run every (N, seed) cell of a config");
  run->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--jobs", jobs, "Parallel cells")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory");

  auto* check = app.add_subcommand("check", "Step-scaling, ledger and finite-difference checks");

  std::string n_list = "100,1000,10000";
  long seed_count = 20;
  auto* sweep = app.add_subcommand("sweep", "N sweep of a config (default: noisy quadratic)");
  sweep->add_option("--n", n_list, "Comma-separated iteration counts");
  sweep->add_option("--seeds", seed_count, "Seeds per N")->check(CLI::PositiveNumber);
  sweep->add_option("--config", config_path, "Base config")->check(CLI::ExistingFile);
  sweep->add_option("--jobs", jobs, "Parallel cells")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) {
      bool ok = true;
      for (const auto& r : h::run_checks()) {
        std::printf("%-24s %s  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
        ok = ok && r.passed;
      }
      return ok ? 0 : 1;
    }

    h::ExperimentConfig config;
    if (*run) {
      config = h::load_config(config_path);
    } else {
      if (!config_path.empty()) {
        config = h::load_config(config_path);
      } else {
        config.noise = {0.1, 0.1, 0.1};
      }
      config.N_list = h::parse_long_list(n_list);
      config.seeds.clear();
      for (long i = 0; i < seed_count; ++i) config.seeds.push_back(static_cast<std::uint64_t>(i));
      h::validate(config);
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (config.output_dir.empty()) config.output_dir = h::default_output_dir();

    const auto result = h::run_experiment(config, {jobs, true});
    std::printf("output: %s\n", config.output_dir.c_str());
    return report(config, result);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
