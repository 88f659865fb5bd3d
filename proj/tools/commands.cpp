#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "scs/errors.hpp"
#include "scs/oracles.hpp"
#include "scs/random.hpp"
#include "scs/serialization.hpp"
#include "scs/stats.hpp"

#ifndef SCS_BUILD_ID
#define SCS_BUILD_ID "unknown"
#endif

namespace scs::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp(const char* format) {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, format);
  return out.str();
}

fs::path fresh_run_dir(const fs::path& root, const RunConfig& config) {
  const std::string base =
      config.name + "-" + utc_timestamp("%Y%m%dT%H%M%SZ") + "-s" + std::to_string(config.trainer.seed);
  fs::path dir = root / base;
  for (int i = 1; fs::exists(dir); ++i) dir = root / (base + "-" + std::to_string(i));
  return dir;
}

json read_last_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::string line;
  std::string last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  if (last.empty()) throw InvalidArgument(path.string() + " has no metrics");
  return json::parse(last);
}

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (node.is_object()) {
    for (const auto& [k, v] : node.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out[prefix] = node;
  }
}

bool ignored_for_comparison(const std::string& field) {
  static const std::set<std::string> ignored = {"name", "env.seed", "trainer.seed", "trainer.workers",
                                                "trainer.checkpoint_every", "trainer.trace"};
  return ignored.contains(field);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t\r");
    if (b != std::string::npos) parts.push_back(item.substr(b, e - b + 1));
  }
  return parts;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split(line, ','));
  }
  return rows;
}

template <typename Fn>
void run_jobs(std::size_t n, int jobs, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < std::min(threads, n); ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) fn(i);
    });
  }
}

}  // namespace

fs::path default_run_root() {
  const char* root = std::getenv(kRunRootEnv);
  return root != nullptr && *root != '\0' ? fs::path(root) : fs::path("runs");
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

// Comma-separated items with surrounding blanks trimmed; empty items are errors.
std::vector<std::string> list_items(const std::string& text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) throw InvalidArgument("empty item in list '" + text + "'");
    parts.push_back(item.substr(b, item.find_last_not_of(" \t\r") - b + 1));
    if (comma == std::string::npos) return parts;
    start = comma + 1;
  }
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : list_items(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: '" + part + "'");
    }
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (const auto& part : list_items(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw InvalidArgument("not an integer: '" + part + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------- train

TrainOutcome run_training(const TrainOptions& options) {
  const RunConfig config = load_run_config(options.config_path, options.overrides);
  const fs::path dir = options.out_dir.empty() ? fresh_run_dir(options.run_root, config) : options.out_dir;
  return run_training(config, dir, options.overrides);
}

TrainOutcome run_training(const RunConfig& config, const fs::path& run_dir,
                          const std::vector<std::string>& overrides) {
  config.validate();
  const TaskSet tasks = generate_task_set(config.env);
  Policy policy = initial_policy(tasks, config.policy, config.trainer.seed);
  validate_training_setup(tasks, policy, config.trainer, config.sampler, config.rewards, config.estimator);

  fs::create_directories(run_dir);
  json manifest{{"format", "scs-run-manifest-v1"},
                {"build", SCS_BUILD_ID},
                {"started_at", utc_timestamp("%Y-%m-%dT%H:%M:%SZ")},
                {"seed", config.trainer.seed},
                {"overrides", overrides},
                {"config", run_config_to_json(config)},
                {"status", "running"}};
  write_json_file(run_dir / "manifest.json", manifest);

  std::ofstream metrics_out(run_dir / "metrics.jsonl");
  std::ofstream trace_out;
  if (config.trace) trace_out.open(run_dir / "trace.jsonl");
  if (config.checkpoint_every > 0) fs::create_directories(run_dir / "checkpoints");

  TrainCallbacks callbacks;
  callbacks.on_step = [&](const StepMetrics& m, const Policy& p) {
    metrics_out << metrics_to_json(m).dump() << '\n';
    if (config.checkpoint_every > 0 && (m.step + 1) % config.checkpoint_every == 0) {
      std::ostringstream name;
      name << "policy_step_" << std::setw(6) << std::setfill('0') << (m.step + 1) << ".json";
      write_json_file(run_dir / "checkpoints" / name.str(), policy_to_json(p));
    }
  };
  if (config.trace) {
    callbacks.on_trace = [&](const ResampleTraceRecord& r) { trace_out << trace_to_json(r).dump() << '\n'; };
  }

  TrainResult result = train(tasks, std::move(policy), config.trainer, config.sampler, config.rewards,
                             config.estimator, callbacks);
  metrics_out.close();
  write_json_file(run_dir / "final_policy.json", policy_to_json(result.policy));

  manifest["status"] = "complete";
  manifest["finished_at"] = utc_timestamp("%Y-%m-%dT%H:%M:%SZ");
  manifest["steps_completed"] = result.metrics.size();
  write_json_file(run_dir / "manifest.json", manifest);
  return TrainOutcome{run_dir, config, std::move(result)};
}

// ---------------------------------------------------------------- probe

std::vector<ProbeRow> probe_truncation(const TaskSet& tasks, const Policy& policy,
                                       const SamplerConfig& sampler, const std::vector<double>& ratios,
                                       int resamples, int initial_per_task, std::uint64_t seed) {
  if (ratios.empty()) throw InvalidArgument("probe needs at least one ratio");
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("probe ratio " + format_number(r) + " outside (0, 1)");
  }
  if (resamples < 1 || initial_per_task < 1) throw InvalidArgument("probe needs m >= 1 and >= 1 initial trajectory");

  const RandomStream root = RandomStream(seed).substream({key(StreamTag::probe)});
  std::vector<std::vector<Trajectory>> initial(tasks.tasks.size());
  for (std::size_t t = 0; t < tasks.tasks.size(); ++t) {
    for (int j = 0; j < initial_per_task; ++j) {
      RandomStream rng = root.substream({0, t, static_cast<std::uint64_t>(j)});
      initial[t].push_back(sample_trajectory(policy, tasks.tasks[t], rng));
    }
  }

  std::vector<ProbeRow> rows;
  for (std::size_t r = 0; r < ratios.size(); ++r) {
    SamplerConfig cfg = sampler;
    cfg.truncation_ratio = ratios[r];
    cfg.n_resamples = resamples;
    std::vector<double> counts;
    for (std::size_t t = 0; t < tasks.tasks.size(); ++t) {
      for (std::size_t j = 0; j < initial[t].size(); ++j) {
        const RandomStream rng = root.substream({1, r, t, j});
        counts.push_back(collect_answers(policy, tasks.tasks[t], initial[t][j], cfg, rng).distinct_count);
      }
    }
    const double se = counts.size() > 1 ? stats::sample_std(counts) / std::sqrt(static_cast<double>(counts.size())) : 0.0;
    rows.push_back({ratios[r], stats::mean(counts), se});
  }
  return rows;
}

void write_probe_csv(std::ostream& out, const std::vector<ProbeRow>& rows) {
  out << "ratio,mean_distinct_options,stderr\n";
  for (const auto& r : rows) {
    out << format_number(r.ratio) << ',' << format_number(r.mean_distinct_options) << ','
        << format_number(r.stderr_) << '\n';
  }
}

// ---------------------------------------------------------------- sweep

std::vector<double> default_sweep_ratios() { return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}; }
std::vector<int> default_sweep_resamples() { return {2, 4, 8}; }

std::vector<SweepRow> run_sweep(const SweepOptions& options) {
  const std::vector<double> ks = options.ratios.empty() ? default_sweep_ratios() : options.ratios;
  const std::vector<int> ms = options.resamples.empty() ? default_sweep_resamples() : options.resamples;
  if (options.out_dir.empty()) throw InvalidArgument("sweep needs an output directory");
  // Fail fast on a broken base config before any cell runs.
  (void)load_run_config(options.config_path, options.overrides);

  struct Cell {
    double k;
    int m;
  };
  std::vector<Cell> cells;
  for (double k : ks) {
    for (int m : ms) cells.push_back({k, m});
  }

  std::vector<SweepRow> rows(cells.size());
  std::map<std::string, std::unique_ptr<std::mutex>> cell_locks;
  for (const auto& c : cells) {
    const std::string id = "k" + format_number(c.k) + "_m" + std::to_string(c.m);
    if (!cell_locks.contains(id)) cell_locks.emplace(id, std::make_unique<std::mutex>());
  }

  run_jobs(cells.size(), options.jobs, [&](std::size_t i) {
    const Cell& c = cells[i];
    SweepRow& row = rows[i];
    row.k = c.k;
    row.m = c.m;
    const std::string id = "k" + format_number(c.k) + "_m" + std::to_string(c.m);
    const fs::path dir = options.out_dir / "cells" / id;
    std::lock_guard lock(*cell_locks.at(id));
    try {
      if (fs::exists(dir / "result.json")) {
        const json done = read_json_file(dir / "result.json");
        row.final_mean_r_acc = done.at("final_mean_r_acc").get<double>();
        row.final_unfaithful_mass = done.at("final_unfaithful_mass").get<double>();
        return;
      }
      std::vector<std::string> overrides = options.overrides;
      overrides.push_back("sampler.truncation_ratio=" + format_number(c.k));
      overrides.push_back("sampler.n_resamples=" + std::to_string(c.m));
      const RunConfig config = load_run_config(options.config_path, overrides);
      const TrainOutcome outcome = run_training(config, dir, overrides);
      const StepMetrics last = outcome.result.metrics.empty() ? StepMetrics{} : outcome.result.metrics.back();
      row.final_mean_r_acc = last.mean_r_acc;
      row.final_unfaithful_mass = last.unfaithful_mass;
      write_json_file(dir / "result.json", json{{"k", c.k},
                                                {"m", c.m},
                                                {"final_mean_r_acc", row.final_mean_r_acc},
                                                {"final_unfaithful_mass", row.final_unfaithful_mass}});
    } catch (const std::exception& e) {
      row.status = std::string("failed: ") + e.what();
      std::replace(row.status.begin(), row.status.end(), ',', ';');
      std::replace(row.status.begin(), row.status.end(), '\n', ' ');
    }
  });

  fs::create_directories(options.out_dir);
  std::ofstream out(options.out_dir / "sweep.csv");
  write_sweep_csv(out, rows);
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "k,m,final_mean_r_acc,final_unfaithful_mass,status\n";
  for (const auto& r : rows) {
    out << format_number(r.k) << ',' << r.m << ',' << format_number(r.final_mean_r_acc) << ','
        << format_number(r.final_unfaithful_mass) << ',' << r.status << '\n';
  }
}

// ---------------------------------------------------------------- aggregate

json aggregate_runs(const std::vector<fs::path>& run_dirs, double confidence) {
  if (run_dirs.size() < 2) throw InvalidArgument("aggregate needs at least two run directories");

  std::vector<std::map<std::string, json>> configs;
  std::vector<double> acc;
  std::vector<double> unfaithful;
  for (const auto& dir : run_dirs) {
    const json manifest = read_json_file(dir / "manifest.json");
    std::map<std::string, json> flat;
    flatten(manifest.at("config"), "", flat);
    configs.push_back(std::move(flat));
    const json last = read_last_jsonl(dir / "metrics.jsonl");
    acc.push_back(last.at("mean_r_acc").get<double>());
    unfaithful.push_back(last.at("unfaithful_mass").get<double>());
  }

  std::set<std::string> differing;
  for (std::size_t i = 1; i < configs.size(); ++i) {
    std::set<std::string> keys;
    for (const auto& [k, v] : configs[0]) keys.insert(k);
    for (const auto& [k, v] : configs[i]) keys.insert(k);
    for (const auto& k : keys) {
      if (ignored_for_comparison(k)) continue;
      const auto a = configs[0].find(k);
      const auto b = configs[i].find(k);
      if (a == configs[0].end() || b == configs[i].end() || a->second != b->second) differing.insert(k);
    }
  }
  if (!differing.empty()) {
    std::string fields;
    for (const auto& f : differing) fields += (fields.empty() ? "" : ", ") + f;
    throw InvalidArgument("run manifests are not comparable; differing fields: " + fields);
  }

  auto summarize = [&](const std::vector<double>& values) {
    const auto ci = stats::t_interval(values, confidence);
    return json{{"values", values},
                {"mean", ci.mean},
                {"half_width", ci.half_width},
                {"lower", ci.lower()},
                {"upper", ci.upper()}};
  };
  json runs = json::array();
  for (const auto& d : run_dirs) runs.push_back(d.string());
  return json{{"format", "scs-aggregate-v1"},
              {"n_runs", run_dirs.size()},
              {"confidence", confidence},
              {"interval", "student-t, two-sided"},
              {"runs", runs},
              {"metrics",
               {{"final_mean_r_acc", summarize(acc)}, {"final_unfaithful_mass", summarize(unfaithful)}}}};
}

// ---------------------------------------------------------------- verify-theory

std::vector<TheoryRow> verify_theory(const TheoryGrid& grid) {
  std::vector<TheoryRow> rows;
  const RandomStream root = RandomStream(grid.seed).substream({key(StreamTag::theory)});
  std::uint64_t cell = 0;
  for (int n : grid.n_options) {
    for (double p : grid.p_correct) {
      for (int m : grid.n_trials) {
        TheoryRow row{n, p, m};
        row.closed_form = oracles::expected_distinct_options(n, p, m) + grid.closed_form_offset;
        RandomStream rng = root.substream({cell++});
        const auto mc = oracles::monte_carlo_distinct_options(n, p, m, grid.experiments, rng);
        row.mc_mean = mc.mean;
        row.mc_stderr = mc.standard_error;
        // Degenerate cells (p = 1, M = 1, ...) have zero spread and must match exactly.
        row.pass = std::abs(row.mc_mean - row.closed_form) <= 3.0 * row.mc_stderr + 1e-12;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_theory_csv(std::ostream& out, const std::vector<TheoryRow>& rows) {
  out << "N,p,M,closed_form,mc_mean,mc_stderr,pass\n";
  for (const auto& r : rows) {
    out << r.n_options << ',' << format_number(r.p_correct) << ',' << r.n_trials << ','
        << format_number(r.closed_form) << ',' << format_number(r.mc_mean) << ','
        << format_number(r.mc_stderr) << ',' << (r.pass ? "pass" : "fail") << '\n';
  }
}

// ---------------------------------------------------------------- report

std::string render_report(const std::vector<fs::path>& inputs) {
  std::ostringstream md;
  md << "# SCS lab report\n";
  for (const auto& path : inputs) {
    md << "\n## " << path.filename().string() << "\n\n";
    if (path.extension() == ".csv") {
      const auto rows = read_csv(path);
      if (rows.empty()) {
        md << "_empty_\n";
        continue;
      }
      md << '|';
      for (const auto& h : rows[0]) md << ' ' << h << " |";
      md << "\n|";
      for (std::size_t i = 0; i < rows[0].size(); ++i) md << " --- |";
      md << '\n';
      for (std::size_t r = 1; r < rows.size(); ++r) {
        md << '|';
        for (const auto& c : rows[r]) md << ' ' << c << " |";
        md << '\n';
      }
    } else if (path.extension() == ".json") {
      const json doc = read_json_file(path);
      if (!doc.contains("metrics")) throw InvalidArgument(path.string() + " is not an aggregate summary");
      md << "Runs: " << doc.at("n_runs").get<std::size_t>() << ", confidence "
         << format_number(doc.at("confidence").get<double>()) << "\n\n";
      md << "| metric | mean | half-width | lower | upper |\n| --- | --- | --- | --- | --- |\n";
      for (const auto& [name, m] : doc.at("metrics").items()) {
        md << "| " << name << " | " << format_number(m.at("mean").get<double>()) << " | "
           << format_number(m.at("half_width").get<double>()) << " | "
           << format_number(m.at("lower").get<double>()) << " | "
           << format_number(m.at("upper").get<double>()) << " |\n";
      }
    } else {
      throw InvalidArgument("report inputs must be .csv or .json: " + path.string());
    }
  }
  return md.str();
}

}  // namespace scs::cli
