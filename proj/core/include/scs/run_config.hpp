#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scs/estimators.hpp"
#include "scs/rewards.hpp"
#include "scs/scs_sampler.hpp"
#include "scs/trainer.hpp"

namespace scs {

/// Everything one training run needs, read from a TOML document with the
/// sections [env], [policy], [sampler], [rewards], [estimator], [trainer].
struct RunConfig {
  std::string name = "run";
  EnvConfig env;
  PolicyConfig policy;
  SamplerConfig sampler;
  RewardConfig rewards;
  EstimatorConfig estimator;
  TrainerConfig trainer;
  /// Write a policy checkpoint every N steps (0 = only the final policy).
  int checkpoint_every = 0;
  /// Emit per-rollout SCS traces to trace.jsonl.
  bool trace = false;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses TOML text and applies `overrides` ("section.key=value", value in
/// TOML syntax; bare words are taken as strings). Unknown keys are errors.
RunConfig parse_run_config(std::string_view toml_text, std::span<const std::string> overrides = {},
                           std::string_view source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path,
                          std::span<const std::string> overrides = {});

nlohmann::json run_config_to_json(const RunConfig& config);

}  // namespace scs
