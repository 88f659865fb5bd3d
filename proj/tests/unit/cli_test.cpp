#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "fixtures.hpp"
#include "scs/errors.hpp"
#include "scs/serialization.hpp"

namespace scs::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTinyConfig = R"(
name = "tiny"
[env]
seed = 5
n_tasks = 3
depth = 2
branching = 2
n_options = 2
[sampler]
truncation_ratio = 0.5
n_resamples = 3
[estimator]
algorithm = "rloo"
[trainer]
samples_per_prompt = 4
total_steps = 6
learning_rate = 0.2
)";

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / ("scs_cli_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write_config(const std::string& text, const std::string& name = "tiny.toml") const {
    const fs::path p = root_ / name;
    std::ofstream(p) << text;
    return p;
  }

  static std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    return lines;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run_exe(const std::string& args) const {
    const std::string cmd = std::string("\"") + SCS_LAB_EXE + "\" " + args + " > \"" + (root_ / "stdout.txt").string() +
                            "\" 2> \"" + (root_ / "stderr.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path root_;
};

TEST(Helpers, FormatNumber) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(-0.25), "-0.25");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
}

TEST(Helpers, StrictListParsing) {
  EXPECT_EQ(parse_double_list("0.1, 0.5,0.9"), (std::vector<double>{0.1, 0.5, 0.9}));
  EXPECT_EQ(parse_int_list("2,4,8"), (std::vector<int>{2, 4, 8}));
  EXPECT_THROW(parse_double_list("0.1,,0.2"), InvalidArgument);
  EXPECT_THROW(parse_double_list("0.1x"), InvalidArgument);
  EXPECT_THROW(parse_int_list("2.5"), InvalidArgument);
  EXPECT_THROW(parse_int_list(""), InvalidArgument);
}

using TrainCommand = TempDir;

TEST_F(TrainCommand, WritesRunDirectory) {
  TrainOptions opts;
  opts.config_path = write_config(std::string(kTinyConfig) + "checkpoint_every = 2\ntrace = true\n");
  opts.overrides = {"trainer.seed=9"};
  opts.run_root = root_ / "runs";
  const TrainOutcome out = run_training(opts);
  EXPECT_EQ(out.run_dir.parent_path(), root_ / "runs");
  EXPECT_EQ(out.run_dir.filename().string().rfind("tiny-", 0), 0u);
  EXPECT_NE(out.run_dir.filename().string().find("-s9"), std::string::npos);

  const auto manifest = read_json_file(out.run_dir / "manifest.json");
  EXPECT_EQ(manifest["format"], "scs-run-manifest-v1");
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(manifest["steps_completed"], 6);
  EXPECT_EQ(manifest["overrides"], nlohmann::json::array({"trainer.seed=9"}));
  EXPECT_EQ(manifest["config"]["trainer"]["seed"], 9);
  EXPECT_TRUE(manifest.contains("build"));

  const auto metrics = lines_of(out.run_dir / "metrics.jsonl");
  ASSERT_EQ(metrics.size(), 6u);
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    EXPECT_EQ(metrics_from_json(nlohmann::json::parse(metrics[i])).step, static_cast<int>(i));
  }
  EXPECT_TRUE(fs::exists(out.run_dir / "checkpoints" / "policy_step_000002.json"));
  EXPECT_TRUE(fs::exists(out.run_dir / "checkpoints" / "policy_step_000006.json"));
  EXPECT_EQ(lines_of(out.run_dir / "trace.jsonl").size(), 6u * 3u * 4u);
  const Policy final_policy = policy_from_json(read_json_file(out.run_dir / "final_policy.json"));
  EXPECT_EQ(final_policy, out.result.policy);
}

TEST_F(TrainCommand, BadConfigCreatesNothing) {
  TrainOptions opts;
  opts.run_root = root_ / "runs";
  opts.config_path = root_ / "missing.toml";
  EXPECT_THROW(run_training(opts), ConfigError);
  opts.config_path = write_config(kTinyConfig);
  opts.overrides = {"sampler.truncation_ratio=1.5"};
  try {
    run_training(opts);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "sampler.truncation_ratio");
  }
  EXPECT_FALSE(fs::exists(root_ / "runs"));
}

TEST_F(TrainCommand, ExplicitOutDirAndRepeatability) {
  const RunConfig config = load_run_config(write_config(kTinyConfig));
  run_training(config, root_ / "a");
  run_training(config, root_ / "b");
  EXPECT_EQ(slurp(root_ / "a" / "metrics.jsonl"), slurp(root_ / "b" / "metrics.jsonl"));
  EXPECT_EQ(slurp(root_ / "a" / "final_policy.json"), slurp(root_ / "b" / "final_policy.json"));
}

TEST(ProbeCommand, SaturatedPolicyGivesOneOption) {
  EnvConfig env = testing::small_env(2, 3);
  const TaskSet tasks = generate_task_set(env);
  std::vector<TreeTask> single = {tasks.tasks[0]};
  TaskSet one{tasks.params, tasks.obs_dim, single};
  const Policy policy = testing::saturated_faithful_policy(one.tasks[0]);
  SamplerConfig sampler;
  sampler.sigma_max = 0.0;
  const auto rows = probe_truncation(one, policy, sampler, {0.2, 0.5, 0.8}, 4, 8, 1);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.mean_distinct_options, 1.0);
    EXPECT_EQ(r.stderr_, 0.0);
  }
  std::ostringstream csv;
  write_probe_csv(csv, rows);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "ratio,mean_distinct_options,stderr");
}

TEST(ProbeCommand, ValidatesArgumentsAndIsDeterministic) {
  const TaskSet tasks = generate_task_set(testing::small_env(2, 3));
  const Policy policy = initial_policy(tasks, PolicyConfig{}, 0);
  const SamplerConfig sampler;
  EXPECT_THROW(probe_truncation(tasks, policy, sampler, {1.0}, 4, 8, 0), InvalidArgument);
  EXPECT_THROW(probe_truncation(tasks, policy, sampler, {0.5}, 0, 8, 0), InvalidArgument);
  EXPECT_THROW(probe_truncation(tasks, policy, sampler, {0.5}, 4, 0, 0), InvalidArgument);
  const auto a = probe_truncation(tasks, policy, sampler, {0.2, 0.8}, 4, 16, 3);
  const auto b = probe_truncation(tasks, policy, sampler, {0.2, 0.8}, 4, 16, 3);
  EXPECT_EQ(a[0].mean_distinct_options, b[0].mean_distinct_options);
  EXPECT_EQ(a[1].stderr_, b[1].stderr_);
}

using SweepCommand = TempDir;

TEST_F(SweepCommand, RunsCellsAndResumes) {
  SweepOptions opts;
  opts.config_path = write_config(kTinyConfig);
  opts.overrides = {"trainer.total_steps=2"};
  opts.ratios = {0.3, 0.7};
  opts.resamples = {2};
  opts.out_dir = root_ / "sweep";
  opts.jobs = 2;
  const auto rows = run_sweep(opts);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) EXPECT_EQ(r.status, "ok");
  EXPECT_TRUE(fs::exists(root_ / "sweep" / "cells" / "k0.3_m2" / "result.json"));
  const auto csv = lines_of(root_ / "sweep" / "sweep.csv");
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], "k,m,final_mean_r_acc,final_unfaithful_mass,status");

  // A completed cell is read back rather than retrained.
  auto result = read_json_file(root_ / "sweep" / "cells" / "k0.3_m2" / "result.json");
  result["final_mean_r_acc"] = 0.123;
  write_json_file(root_ / "sweep" / "cells" / "k0.3_m2" / "result.json", result);
  const auto again = run_sweep(opts);
  EXPECT_EQ(again[0].final_mean_r_acc, 0.123);
  EXPECT_EQ(again[1].final_mean_r_acc, rows[1].final_mean_r_acc);
}

TEST_F(SweepCommand, BadBaseConfigFailsFast) {
  SweepOptions opts;
  opts.config_path = write_config(kTinyConfig);
  opts.overrides = {"trainer.workers=0"};
  opts.out_dir = root_ / "sweep";
  EXPECT_THROW(run_sweep(opts), ConfigError);
  EXPECT_FALSE(fs::exists(root_ / "sweep" / "cells"));
}

using AggregateCommand = TempDir;

void fake_run(const fs::path& dir, double acc, std::uint64_t seed, double lr = 0.1) {
  fs::create_directories(dir);
  RunConfig config;
  config.trainer.seed = seed;
  config.env.seed = seed + 100;
  config.trainer.learning_rate = lr;
  write_json_file(dir / "manifest.json", {{"format", "scs-run-manifest-v1"}, {"config", run_config_to_json(config)}});
  StepMetrics early;
  StepMetrics last;
  last.step = 1;
  last.mean_r_acc = acc;
  last.unfaithful_mass = acc / 100.0;
  std::ofstream(dir / "metrics.jsonl") << metrics_to_json(early).dump() << '\n' << metrics_to_json(last).dump() << '\n';
}

TEST_F(AggregateCommand, StudentTIntervalOverFinalMetrics) {
  fake_run(root_ / "r0", 64.5, 0);
  fake_run(root_ / "r1", 64.4, 1);
  fake_run(root_ / "r2", 64.6, 2);
  const auto doc = aggregate_runs({root_ / "r0", root_ / "r1", root_ / "r2"}, 0.95);
  EXPECT_EQ(doc["format"], "scs-aggregate-v1");
  EXPECT_EQ(doc["n_runs"], 3);
  const auto& acc = doc["metrics"]["final_mean_r_acc"];
  EXPECT_NEAR(acc["mean"].get<double>(), 64.5, 1e-12);
  EXPECT_NEAR(acc["half_width"].get<double>(), 0.248, 5e-4);
  EXPECT_NEAR(acc["upper"].get<double>() - acc["lower"].get<double>(), 2 * acc["half_width"].get<double>(), 1e-12);
}

TEST_F(AggregateCommand, RejectsIncomparableRuns) {
  fake_run(root_ / "r0", 0.5, 0);
  fake_run(root_ / "r1", 0.6, 1, 0.2);
  try {
    aggregate_runs({root_ / "r0", root_ / "r1"}, 0.95);
    FAIL() << "expected mismatch";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("trainer.learning_rate"), std::string::npos);
    EXPECT_EQ(std::string(e.what()).find("trainer.seed"), std::string::npos);
  }
  EXPECT_THROW(aggregate_runs({root_ / "r0"}, 0.95), InvalidArgument);
}

TEST(VerifyTheoryCommand, SmallGridPassesAndNegativeControlFails) {
  TheoryGrid grid;
  grid.n_options = {2, 4};
  grid.p_correct = {0.0, 0.5, 1.0};
  grid.n_trials = {1, 4};
  grid.experiments = 20000;
  const auto rows = verify_theory(grid);
  ASSERT_EQ(rows.size(), 12u);
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.n_options << " " << r.p_correct << " " << r.n_trials;
  grid.closed_form_offset = 0.05;
  grid.p_correct = {0.5};
  grid.n_trials = {4};
  for (const auto& r : verify_theory(grid)) EXPECT_FALSE(r.pass);
}

using ReportCommand = TempDir;

TEST_F(ReportCommand, RendersCsvAndAggregate) {
  std::ofstream(root_ / "probe.csv") << "ratio,mean_distinct_options,stderr\n0.2,2.5,0.1\n";
  fake_run(root_ / "r0", 0.5, 0);
  fake_run(root_ / "r1", 0.7, 1);
  write_json_file(root_ / "summary.json", aggregate_runs({root_ / "r0", root_ / "r1"}, 0.9));
  const std::string md = render_report({root_ / "probe.csv", root_ / "summary.json"});
  EXPECT_EQ(md.rfind("# SCS lab report", 0), 0u);
  EXPECT_NE(md.find("## probe.csv"), std::string::npos);
  EXPECT_NE(md.find("| 0.2 | 2.5 | 0.1 |"), std::string::npos);
  EXPECT_NE(md.find("final_mean_r_acc"), std::string::npos);
  std::ofstream(root_ / "notes.txt") << "x";
  EXPECT_THROW(render_report({root_ / "notes.txt"}), InvalidArgument);
}

using ExecutableCommand = TempDir;

TEST_F(ExecutableCommand, ExitCodes) {
  EXPECT_EQ(run_exe("--version"), 0);
  EXPECT_NE(slurp(root_ / "stdout.txt").find("scs_lab-"), std::string::npos);
  EXPECT_NE(run_exe(""), 0);
  EXPECT_EQ(run_exe("train -c \"" + (root_ / "missing.toml").string() + "\" --run-root \"" + (root_ / "runs").string() + "\""), 2);
  EXPECT_FALSE(fs::exists(root_ / "runs"));
  const fs::path cfg = write_config(kTinyConfig);
  EXPECT_EQ(run_exe("train -c \"" + cfg.string() + "\" --set sampler.n_resamples=0 -o \"" + (root_ / "bad").string() + "\""), 2);
  EXPECT_NE(slurp(root_ / "stderr.txt").find("sampler.n_resamples"), std::string::npos);
  EXPECT_FALSE(fs::exists(root_ / "bad"));
  EXPECT_EQ(run_exe("train -c \"" + cfg.string() + "\" -o \"" + (root_ / "good").string() + "\""), 0);
  EXPECT_TRUE(fs::exists(root_ / "good" / "final_policy.json"));
  EXPECT_EQ(run_exe("verify-theory --experiments 2000 -o \"" + (root_ / "theory.csv").string() + "\""), 0);
  EXPECT_EQ(lines_of(root_ / "theory.csv").size(), 1u + 4u * 5u * 4u);
  EXPECT_EQ(run_exe("probe-truncation -c \"" + cfg.string() + "\" --ratios 0.2,0.8 --initial 2"), 0);
  EXPECT_EQ(lines_of(root_ / "stdout.txt").size(), 3u);
  EXPECT_EQ(run_exe("report \"" + (root_ / "theory.csv").string() + "\""), 0);
}

}  // namespace
}  // namespace scs::cli
