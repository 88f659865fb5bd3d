// scs_lab: train, probe, sweep and summarize self-consistency experiments.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "scs/errors.hpp"
#include "scs/serialization.hpp"

namespace fs = std::filesystem;
using namespace scs;
using namespace scs::cli;

namespace {

// Writes to `path` when given, otherwise to stdout.
template <typename Fn>
void emit(const std::string& path, Fn&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  write(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-consistency sampling lab on synthetic reasoning trees"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SCS_BUILD_ID);

  // train
  TrainOptions train_opts;
  std::string train_out;
  std::string run_root;
  auto* train_cmd = app.add_subcommand("train", "Run one training job into a fresh run directory");
  train_cmd->add_option("-c,--config", train_opts.config_path, "TOML run config")->required();
  train_cmd->add_option("--set", train_opts.overrides, "Override as section.key=value (repeatable)");
  train_cmd->add_option("-o,--out", train_out, "Exact run directory (default: timestamped under the run root)");
  train_cmd->add_option("--run-root", run_root, std::string("Run root (default: $") + kRunRootEnv + " or ./runs)");

  // probe-truncation
  std::string probe_config;
  std::vector<std::string> probe_overrides;
  std::string probe_policy;
  std::string probe_ratios = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  int probe_m = 4;
  int probe_initial = 8;
  std::uint64_t probe_seed = 0;
  std::string probe_out;
  auto* probe_cmd = app.add_subcommand("probe-truncation", "Distinct options among resampled continuations per ratio");
  probe_cmd->add_option("-c,--config", probe_config, "TOML run config (task set and sampler noise)")->required();
  probe_cmd->add_option("--set", probe_overrides, "Override as section.key=value (repeatable)");
  probe_cmd->add_option("--policy", probe_policy, "Policy checkpoint (default: the config's initial policy)");
  probe_cmd->add_option("--ratios", probe_ratios, "Comma-separated truncation ratios in (0, 1)");
  probe_cmd->add_option("-m,--resamples", probe_m, "Continuations per initial trajectory");
  probe_cmd->add_option("--initial", probe_initial, "Initial trajectories per task");
  probe_cmd->add_option("--seed", probe_seed, "Probe seed");
  probe_cmd->add_option("-o,--out", probe_out, "CSV path (default: stdout)");

  // sweep
  SweepOptions sweep_opts;
  std::string sweep_ratios;
  std::string sweep_resamples;
  std::string sweep_out;
  auto* sweep_cmd = app.add_subcommand("sweep", "One training run per (k, m) cell");
  sweep_cmd->add_option("-c,--config", sweep_opts.config_path, "Base TOML run config")->required();
  sweep_cmd->add_option("--set", sweep_opts.overrides, "Override as section.key=value (repeatable)");
  sweep_cmd->add_option("--ratios", sweep_ratios, "Comma-separated k values (default 0.1..0.9)");
  sweep_cmd->add_option("--resamples", sweep_resamples, "Comma-separated m values (default 2,4,8)");
  sweep_cmd->add_option("-o,--out", sweep_out, "Sweep directory (holds cells/ and sweep.csv)")->required();
  sweep_cmd->add_option("-j,--jobs", sweep_opts.jobs, "Concurrent cells")->check(CLI::PositiveNumber);

  // aggregate
  std::vector<std::string> agg_dirs;
  double agg_confidence = 0.95;
  std::string agg_out;
  auto* agg_cmd = app.add_subcommand("aggregate", "Mean and t-interval of final metrics across runs");
  agg_cmd->add_option("runs", agg_dirs, "Run directories")->required();
  agg_cmd->add_option("--confidence", agg_confidence, "Two-sided confidence level")->check(CLI::Range(0.0, 1.0));
  agg_cmd->add_option("-o,--out", agg_out, "Summary JSON path (default: stdout)");

  // verify-theory
  TheoryGrid grid;
  std::string theory_out;
  auto* theory_cmd = app.add_subcommand("verify-theory", "Closed-form distinct-option count vs Monte Carlo");
  theory_cmd->add_option("--experiments", grid.experiments, "Monte Carlo trials per cell")->check(CLI::PositiveNumber);
  theory_cmd->add_option("--seed", grid.seed, "Monte Carlo seed");
  theory_cmd->add_option("-o,--out", theory_out, "CSV path (default: stdout)");

  // report
  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Render CSV reports and aggregate summaries as markdown");
  report_cmd->add_option("inputs", report_inputs, "CSV or summary JSON files")->required();
  report_cmd->add_option("-o,--out", report_out, "Markdown path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      train_opts.out_dir = train_out;
      if (!run_root.empty()) train_opts.run_root = run_root;
      const TrainOutcome outcome = run_training(train_opts);
      const auto& last = outcome.result.metrics.back();
      std::cout << outcome.run_dir.string() << '\n'
                << "final mean_r_acc=" << format_number(last.mean_r_acc)
                << " unfaithful_mass=" << format_number(last.unfaithful_mass) << '\n';
      return EXIT_SUCCESS;
    }
    if (probe_cmd->parsed()) {
      const RunConfig config = load_run_config(probe_config, probe_overrides);
      const TaskSet tasks = generate_task_set(config.env);
      const Policy policy = probe_policy.empty() ? initial_policy(tasks, config.policy, config.trainer.seed)
                                                 : policy_from_json(read_json_file(probe_policy));
      const auto rows = probe_truncation(tasks, policy, config.sampler, parse_double_list(probe_ratios), probe_m,
                                         probe_initial, probe_seed);
      emit(probe_out, [&](std::ostream& out) { write_probe_csv(out, rows); });
      return EXIT_SUCCESS;
    }
    if (sweep_cmd->parsed()) {
      if (!sweep_ratios.empty()) sweep_opts.ratios = parse_double_list(sweep_ratios);
      if (!sweep_resamples.empty()) sweep_opts.resamples = parse_int_list(sweep_resamples);
      sweep_opts.out_dir = sweep_out;
      const auto rows = run_sweep(sweep_opts);
      write_sweep_csv(std::cout, rows);
      const bool any_failed =
          std::any_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.status != "ok"; });
      return any_failed ? EXIT_FAILURE : EXIT_SUCCESS;
    }
    if (agg_cmd->parsed()) {
      const std::vector<fs::path> dirs(agg_dirs.begin(), agg_dirs.end());
      const auto summary = aggregate_runs(dirs, agg_confidence);
      emit(agg_out, [&](std::ostream& out) { out << summary.dump(2) << '\n'; });
      return EXIT_SUCCESS;
    }
    if (theory_cmd->parsed()) {
      const auto rows = verify_theory(grid);
      emit(theory_out, [&](std::ostream& out) { write_theory_csv(out, rows); });
      const auto failed = std::count_if(rows.begin(), rows.end(), [](const TheoryRow& r) { return !r.pass; });
      if (failed > 0) std::cerr << failed << " of " << rows.size() << " cells failed\n";
      return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
    }
    if (report_cmd->parsed()) {
      const std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
      const std::string md = render_report(inputs);
      emit(report_out, [&](std::ostream& out) { out << md; });
      return EXIT_SUCCESS;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return EXIT_FAILURE;
  }
  return EXIT_FAILURE;
}
