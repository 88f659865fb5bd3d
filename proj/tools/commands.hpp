#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scs/policy.hpp"
#include "scs/run_config.hpp"
#include "scs/trainer.hpp"

namespace scs::cli {

/// Environment variable naming the directory that holds run directories.
inline constexpr const char* kRunRootEnv = "SCS_RUN_ROOT";

std::filesystem::path default_run_root();

// ---------------------------------------------------------------- train

struct TrainOptions {
  std::filesystem::path config_path;
  std::vector<std::string> overrides;
  /// Exact run directory; when empty a timestamped one is created under run_root.
  std::filesystem::path out_dir;
  std::filesystem::path run_root = default_run_root();
};

struct TrainOutcome {
  std::filesystem::path run_dir;
  RunConfig config;
  TrainResult result;
};

/// Loads and validates the config before touching the filesystem, then writes
/// metrics.jsonl, manifest.json, final_policy.json (and optional checkpoints
/// and trace.jsonl) into the run directory.
TrainOutcome run_training(const TrainOptions& options);

/// Runs a fully resolved config into `run_dir`.
TrainOutcome run_training(const RunConfig& config, const std::filesystem::path& run_dir,
                          const std::vector<std::string>& overrides = {});

// ---------------------------------------------------------------- probe

struct ProbeRow {
  double ratio = 0.0;
  double mean_distinct_options = 0.0;
  double stderr_ = 0.0;
};

/// For every task draws `initial_per_task` initial trajectories from the
/// clean observation, then for each ratio truncates them and counts distinct
/// options among `resamples` perturbed continuations. The same initial
/// trajectories are reused across ratios.
std::vector<ProbeRow> probe_truncation(const TaskSet& tasks, const Policy& policy,
                                       const SamplerConfig& sampler, const std::vector<double>& ratios,
                                       int resamples, int initial_per_task, std::uint64_t seed);

void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows);

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  std::filesystem::path config_path;
  std::vector<std::string> overrides;
  std::vector<double> ratios;
  std::vector<int> resamples;
  std::filesystem::path out_dir;
  int jobs = 1;
};

struct SweepRow {
  double k = 0.0;
  int m = 0;
  double final_mean_r_acc = 0.0;
  double final_unfaithful_mass = 0.0;
  std::string status = "ok";
};

std::vector<double> default_sweep_ratios();
std::vector<int> default_sweep_resamples();

/// One seeded training run per (k, m) cell, each in its own directory under
/// out_dir/cells. Cells with a result.json are reused. Writes out_dir/sweep.csv.
std::vector<SweepRow> run_sweep(const SweepOptions& options);

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

// ---------------------------------------------------------------- aggregate

/// Mean and Student-t interval of the final mean r_acc and unfaithful mass
/// across run directories. Throws if fewer than two runs are given or their
/// manifests differ in anything but seeds, worker count and name.
nlohmann::json aggregate_runs(const std::vector<std::filesystem::path>& run_dirs, double confidence);

// ---------------------------------------------------------------- verify-theory

struct TheoryGrid {
  std::vector<int> n_options = {2, 3, 4, 6};
  std::vector<double> p_correct = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> n_trials = {1, 2, 4, 8};
  long long experiments = 100000;
  std::uint64_t seed = 20240601;
  /// Added to the closed form; non-zero only for negative-control tests.
  double closed_form_offset = 0.0;
};

struct TheoryRow {
  int n_options = 0;
  double p_correct = 0.0;
  int n_trials = 0;
  double closed_form = 0.0;
  double mc_mean = 0.0;
  double mc_stderr = 0.0;
  bool pass = false;
};

std::vector<TheoryRow> verify_theory(const TheoryGrid& grid);
void write_theory_csv(std::ostream& out, const std::vector<TheoryRow>& rows);

// ---------------------------------------------------------------- report

/// Renders CSV reports and aggregate summaries as one markdown document.
std::string render_report(const std::vector<std::filesystem::path>& inputs);

// ---------------------------------------------------------------- helpers

std::string format_number(double value);
std::vector<double> parse_double_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace scs::cli
