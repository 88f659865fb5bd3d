#include "scs/oracles.hpp"

#include <bit>
#include <cmath>
#include <numeric>

#include "scs/errors.hpp"

namespace scs::oracles {

double expected_distinct_options(int n_options, double p_correct, int n_trials) {
  if (n_options < 2) throw InvalidArgument("expected_distinct_options needs N >= 2");
  if (n_trials < 1) throw InvalidArgument("expected_distinct_options needs M >= 1");
  if (!(p_correct >= 0.0 && p_correct <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  // A single draw has exactly one label; the general expression only rounds to it.
  if (n_trials == 1) return 1.0;
  const double n = static_cast<double>(n_options);
  const double q = 1.0 - p_correct;
  return 1.0 - std::pow(q, n_trials) + (n - 1.0) * (1.0 - std::pow(1.0 - q / (n - 1.0), n_trials));
}

double expected_distinct_from_distribution(std::span<const double> probabilities, int n_trials) {
  if (n_trials < 1) throw InvalidArgument("need at least one draw");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probabilities must lie in [0, 1]");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("probabilities must sum to 1");
  double e = 0.0;
  for (double p : probabilities) e += 1.0 - std::pow(1.0 - p, n_trials);
  return e;
}

MonteCarloEstimate monte_carlo_distinct_options(int n_options, double p_correct, int n_trials,
                                                long long experiments, RandomStream& rng) {
  if (n_options < 2 || n_options > 64) throw InvalidArgument("monte carlo supports 2 <= N <= 64");
  if (n_trials < 1 || experiments < 1) throw InvalidArgument("need M >= 1 and trials >= 1");
  if (!(p_correct >= 0.0 && p_correct <= 1.0)) throw InvalidArgument("p must lie in [0, 1]");
  const auto others = static_cast<std::uint64_t>(n_options - 1);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (long long e = 0; e < experiments; ++e) {
    std::uint64_t seen = 0;
    for (int t = 0; t < n_trials; ++t) {
      // Option 0 plays the correct label.
      const std::uint64_t label = rng.uniform() < p_correct ? 0 : 1 + rng.below(others);
      seen |= std::uint64_t{1} << label;
    }
    const double distinct = static_cast<double>(std::popcount(seen));
    sum += distinct;
    sum_sq += distinct * distinct;
  }
  const double n = static_cast<double>(experiments);
  MonteCarloEstimate est;
  est.mean = sum / n;
  if (experiments > 1) {
    const double var = std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0));
    est.standard_error = std::sqrt(var / n);
  }
  return est;
}

std::vector<double> continuation_option_distribution(const Policy& policy, const TreeTask& task,
                                                     std::span<const int> prefix,
                                                     std::span<const double> observation) {
  const ReasoningTree& tree = task.tree;
  if (prefix.size() >= static_cast<std::size_t>(tree.depth()) || !tree.is_valid_prefix(prefix)) {
    throw InvalidArgument("continuation prefix must end at a decision node");
  }
  policy.check_compatible(tree, observation.size());
  std::vector<double> options(static_cast<std::size_t>(tree.n_options()), 0.0);

  // Depth-first over the subtree below the prefix, carrying path probability.
  ActionPath path(prefix.begin(), prefix.end());
  const auto depth = static_cast<std::size_t>(tree.depth());
  auto walk = [&](auto&& self, double prob) -> void {
    if (path.size() == depth) {
      options[static_cast<std::size_t>(tree.option_at(path))] += prob;
      return;
    }
    const auto probs = policy.action_probabilities(tree.node_index(path), observation);
    for (std::size_t a = 0; a < probs.size(); ++a) {
      path.push_back(static_cast<int>(a));
      self(self, prob * probs[a]);
      path.pop_back();
    }
  };
  walk(walk, 1.0);
  return options;
}

std::vector<double> path_probabilities(const Policy& policy, const TreeTask& task,
                                       std::span<const ActionPath> paths) {
  std::vector<double> probs;
  probs.reserve(paths.size());
  for (const auto& path : paths) {
    probs.push_back(trajectory_probability(task.tree, policy, task.observation, path));
  }
  return probs;
}

double exact_expected_reward(const Policy& policy, const TreeTask& task, const RewardConfig& rewards,
                             const std::optional<SamplerConfig>& sampler,
                             const ExpectationOptions& options) {
  rewards.validate();
  const auto paths = enumerate_trajectories(task.tree, options.enumeration_cap);
  const auto probs = path_probabilities(policy, task, paths);

  std::vector<std::vector<double>> noisy_observations;
  if (sampler) {
    sampler->validate();
    if (sampler->sigma_max > 0.0) {
      RandomStream rng(options.perturbation_seed);
      for (int i = 0; i < options.perturbation_samples; ++i) {
        noisy_observations.push_back(
            perturb_observation(task.observation, sampler->sigma_min, sampler->sigma_max, rng).values);
      }
    } else {
      noisy_observations.push_back(task.observation);
    }
  }

  double expected = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const int option = task.tree.option_at(paths[i]);
    double reward = rewards.accuracy_weight * (option == task.correct_option ? 1.0 : 0.0) +
                    rewards.format_weight;
    if (sampler) {
      const std::size_t kept = truncated_length(paths[i].size(), sampler->truncation_ratio);
      const std::span<const int> prefix(paths[i].data(), kept);
      std::vector<double> q(static_cast<std::size_t>(task.tree.n_options()), 0.0);
      for (const auto& obs : noisy_observations) {
        const auto qi = continuation_option_distribution(policy, task, prefix, obs);
        for (std::size_t o = 0; o < q.size(); ++o) q[o] += qi[o];
      }
      for (double& v : q) v /= static_cast<double>(noisy_observations.size());
      const int m = sampler->n_resamples;
      const double distinct = expected_distinct_from_distribution(q, m);
      // r_con is affine in |A|, so its expectation is r_con at E|A|.
      const double spread = static_cast<double>(m) - distinct;
      reward += rewards.consistency_weight *
                (rewards.normalize_consistency ? spread / static_cast<double>(m) : spread);
    }
    expected += probs[i] * reward;
  }
  return expected;
}

PolicyParameters exact_policy_gradient(const Policy& policy, const TreeTask& task,
                                       const RewardConfig& rewards, std::size_t enumeration_cap) {
  rewards.validate();
  const auto paths = enumerate_trajectories(task.tree, enumeration_cap);
  const auto probs = path_probabilities(policy, task, paths);
  PolicyParameters grad(policy.shape());
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const int option = task.tree.option_at(paths[i]);
    const double reward = rewards.accuracy_weight * (option == task.correct_option ? 1.0 : 0.0) +
                          rewards.format_weight;
    if (reward == 0.0 || probs[i] == 0.0) continue;
    accumulate_log_prob_gradient(policy, task, make_trajectory(task.tree, paths[i]),
                                 probs[i] * reward, grad);
  }
  return grad;
}

}  // namespace scs::oracles
