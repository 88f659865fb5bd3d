#pragma once

#include <optional>
#include <span>
#include <vector>

#include "scs/policy.hpp"
#include "scs/random.hpp"
#include "scs/rewards.hpp"
#include "scs/scs_sampler.hpp"
#include "scs/tree_env.hpp"

/// Closed-form and brute-force references used to check every stochastic
/// estimate in the library. Nothing here shares a code path with the
/// samplers it verifies beyond the policy's softmax.
namespace scs::oracles {

/// Expected number of distinct labels in M i.i.d. draws when the correct
/// label has probability p and the other N - 1 labels share 1 - p uniformly:
///   E[S] = 1 - (1-p)^M + (N-1) [1 - (1 - (1-p)/(N-1))^M]
double expected_distinct_options(int n_options, double p_correct, int n_trials);

/// Expected distinct count for M i.i.d. draws from an arbitrary categorical.
double expected_distinct_from_distribution(std::span<const double> probabilities, int n_trials);

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Simulates the draw process behind expected_distinct_options.
MonteCarloEstimate monte_carlo_distinct_options(int n_options, double p_correct, int n_trials,
                                                long long experiments, RandomStream& rng);

/// Option distribution of a continuation from `prefix` under `observation`.
std::vector<double> continuation_option_distribution(const Policy& policy, const TreeTask& task,
                                                     std::span<const int> prefix,
                                                     std::span<const double> observation);

/// Exact probabilities of every enumerated path, in enumeration order.
std::vector<double> path_probabilities(const Policy& policy, const TreeTask& task,
                                       std::span<const ActionPath> paths);

struct ExpectationOptions {
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  /// Seeded noise draws used to average the continuation distribution when
  /// sigma_max > 0. The result is then an approximation; with
  /// sigma_max == 0 it is exact.
  int perturbation_samples = 256;
  std::uint64_t perturbation_seed = 0;
};

/// sum_tau P(tau | x) E[total reward | tau]. `sampler` == nullopt means
/// self-consistency sampling is off and r_con is zero.
double exact_expected_reward(const Policy& policy, const TreeTask& task, const RewardConfig& rewards,
                             const std::optional<SamplerConfig>& sampler,
                             const ExpectationOptions& options = {});

/// sum_tau P(tau) R(tau) grad log P(tau) with R the accuracy/format reward.
PolicyParameters exact_policy_gradient(const Policy& policy, const TreeTask& task,
                                       const RewardConfig& rewards,
                                       std::size_t enumeration_cap = kDefaultEnumerationCap);

}  // namespace scs::oracles
