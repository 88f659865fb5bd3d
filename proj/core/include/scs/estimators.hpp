#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scs/policy.hpp"
#include "scs/rewards.hpp"
#include "scs/tree_env.hpp"

namespace scs {

enum class Algorithm { grpo, rloo, reinforce_pp, reinforce_pp_baseline };

std::string_view to_string(Algorithm algorithm) noexcept;
Algorithm parse_algorithm(std::string_view name);

/// Samples per prompt used by the reference training recipes: 1 for plain
/// REINFORCE++, 16 otherwise.
int default_samples_per_prompt(Algorithm algorithm) noexcept;

struct EstimatorConfig {
  Algorithm algorithm = Algorithm::rloo;
  double kl_coef = 0.0;
  std::optional<double> reward_clip;
  double epsilon = 1e-8;

  void validate() const;
};

/// K rollouts of one task.
struct RolloutGroup {
  std::string task_id;
  std::vector<Trajectory> rollouts;
  std::vector<RewardBreakdown> rewards;
  /// Summed per-step k3 penalties per rollout; empty means all zero.
  std::vector<double> kl_sums;

  std::size_t size() const noexcept { return rollouts.size(); }
};

struct AdvantageBatch {
  std::vector<double> advantages;
  Algorithm estimator = Algorithm::rloo;
};

/// (r_i - mean) / (std + epsilon) with the population standard deviation.
/// Groups whose rewards are all equal get zero advantages.
AdvantageBatch grpo_advantages(std::span<const double> rewards, double epsilon = 1e-8);

/// r_i minus the mean of the other K - 1 rewards.
AdvantageBatch rloo_advantages(std::span<const double> rewards);

/// k3(log rho) = rho - 1 - log rho, with log rho = log p_ref - log p_live.
double k3_penalty(double log_ratio) noexcept;

/// Per-step k3 penalties of the taken actions.
std::vector<double> kl_penalty_k3(const Policy& policy, const PolicySnapshot& reference,
                                  const TreeTask& task, const Trajectory& trajectory);

/// REINFORCE++ shaping across a whole update batch: reward minus
/// kl_coef * summed k3, optional clipping to +-reward_clip, then batch-level
/// normalisation. The baseline variant subtracts each group's mean first.
/// `kl_sums` may be empty (no penalty) or shaped like `group_rewards`.
std::vector<AdvantageBatch> reinforce_pp_transform(
    std::span<const std::vector<double>> group_rewards, const EstimatorConfig& config,
    std::span<const std::vector<double>> kl_sums = {});

/// Dispatches on config.algorithm. KL shaping applies to every estimator.
std::vector<AdvantageBatch> compute_advantages(std::span<const RolloutGroup> groups,
                                               const EstimatorConfig& config);

}  // namespace scs
