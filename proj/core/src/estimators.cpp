#include "scs/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scs/errors.hpp"

namespace scs {
namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
  bool constant = true;
};

Moments population_moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  m.constant = *lo == *hi;
  m.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return m;
}

std::vector<double> standardize(std::span<const double> xs, double epsilon) {
  const Moments m = population_moments(xs);
  std::vector<double> out(xs.size(), 0.0);
  if (m.constant || m.std == 0.0) return out;
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - m.mean) / (m.std + epsilon);
  return out;
}

void require_finite(std::span<const double> xs, const char* what) {
  if (!std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument(std::string(what) + " must be finite");
  }
}

}  // namespace

std::string_view to_string(Algorithm algorithm) noexcept {
  switch (algorithm) {
    case Algorithm::grpo: return "grpo";
    case Algorithm::rloo: return "rloo";
    case Algorithm::reinforce_pp: return "reinforce_pp";
    case Algorithm::reinforce_pp_baseline: return "reinforce_pp_baseline";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::grpo, Algorithm::rloo, Algorithm::reinforce_pp,
                      Algorithm::reinforce_pp_baseline}) {
    if (to_string(a) == name) return a;
  }
  throw InvalidArgument("unknown estimator algorithm '" + std::string(name) + "'");
}

int default_samples_per_prompt(Algorithm algorithm) noexcept {
  return algorithm == Algorithm::reinforce_pp ? 1 : 16;
}

void EstimatorConfig::validate() const {
  if (!(kl_coef >= 0.0) || !std::isfinite(kl_coef)) throw InvalidArgument("kl_coef must be >= 0");
  if (reward_clip && !(*reward_clip > 0.0)) throw InvalidArgument("reward_clip must be > 0");
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
}

AdvantageBatch grpo_advantages(std::span<const double> rewards, double epsilon) {
  if (rewards.size() < 2) throw InvalidArgument("GRPO needs at least 2 rollouts per group");
  require_finite(rewards, "rewards");
  return {standardize(rewards, epsilon), Algorithm::grpo};
}

AdvantageBatch rloo_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw InvalidArgument("RLOO needs at least 2 rollouts per group");
  require_finite(rewards, "rewards");
  const double k = static_cast<double>(rewards.size());
  const double total = std::accumulate(rewards.begin(), rewards.end(), 0.0);
  AdvantageBatch batch{std::vector<double>(rewards.size()), Algorithm::rloo};
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    batch.advantages[i] = rewards[i] - (total - rewards[i]) / (k - 1.0);
  }
  return batch;
}

double k3_penalty(double log_ratio) noexcept {
  // expm1 keeps the difference accurate when the two policies nearly agree.
  return std::max(0.0, std::expm1(log_ratio) - log_ratio);
}

std::vector<double> kl_penalty_k3(const Policy& policy, const PolicySnapshot& reference,
                                  const TreeTask& task, const Trajectory& trajectory) {
  if (!task.tree.is_complete_path(trajectory.actions)) {
    throw InvalidArgument("kl penalty needs a complete trajectory of the task's tree");
  }
  policy.check_compatible(task.tree, task.observation.size());
  reference.policy().check_compatible(task.tree, task.observation.size());
  const std::span<const int> actions = trajectory.actions;
  std::vector<double> penalties;
  penalties.reserve(actions.size());
  for (std::size_t step = 0; step < actions.size(); ++step) {
    const std::size_t node = task.tree.node_index(actions.first(step));
    const auto a = static_cast<std::size_t>(actions[step]);
    const double live = policy.action_log_probabilities(node, task.observation)[a];
    const double ref = reference.policy().action_log_probabilities(node, task.observation)[a];
    penalties.push_back(k3_penalty(ref - live));
  }
  return penalties;
}

std::vector<AdvantageBatch> reinforce_pp_transform(
    std::span<const std::vector<double>> group_rewards, const EstimatorConfig& config,
    std::span<const std::vector<double>> kl_sums) {
  config.validate();
  std::size_t total = 0;
  for (const auto& g : group_rewards) total += g.size();
  if (total == 0) throw InvalidArgument("REINFORCE++ needs a non-empty batch");
  if (!kl_sums.empty() && kl_sums.size() != group_rewards.size()) {
    throw InvalidArgument("kl sums must align with reward groups");
  }

  std::vector<double> shaped;
  shaped.reserve(total);
  for (std::size_t g = 0; g < group_rewards.size(); ++g) {
    const auto& rewards = group_rewards[g];
    require_finite(rewards, "rewards");
    if (!kl_sums.empty() && kl_sums[g].size() != rewards.size()) {
      throw InvalidArgument("kl sums must align with rewards");
    }
    std::vector<double> local(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      double r = rewards[i];
      if (!kl_sums.empty()) r -= config.kl_coef * kl_sums[g][i];
      if (config.reward_clip) r = std::clamp(r, -*config.reward_clip, *config.reward_clip);
      local[i] = r;
    }
    if (config.algorithm == Algorithm::reinforce_pp_baseline && !local.empty()) {
      const double mean = std::accumulate(local.begin(), local.end(), 0.0) /
                          static_cast<double>(local.size());
      for (double& r : local) r -= mean;
    }
    shaped.insert(shaped.end(), local.begin(), local.end());
  }

  const std::vector<double> normalized = standardize(shaped, config.epsilon);
  std::vector<AdvantageBatch> out;
  out.reserve(group_rewards.size());
  std::size_t offset = 0;
  for (const auto& g : group_rewards) {
    AdvantageBatch batch;
    batch.estimator = config.algorithm;
    batch.advantages.assign(normalized.begin() + static_cast<std::ptrdiff_t>(offset),
                            normalized.begin() + static_cast<std::ptrdiff_t>(offset + g.size()));
    offset += g.size();
    out.push_back(std::move(batch));
  }
  return out;
}

std::vector<AdvantageBatch> compute_advantages(std::span<const RolloutGroup> groups,
                                               const EstimatorConfig& config) {
  config.validate();
  std::vector<std::vector<double>> rewards;
  std::vector<std::vector<double>> kls;
  rewards.reserve(groups.size());
  kls.reserve(groups.size());
  bool any_kl = false;
  for (const auto& g : groups) {
    if (g.rewards.size() != g.rollouts.size()) {
      throw InvalidArgument("rollout group rewards must align with rollouts");
    }
    std::vector<double> r(g.rewards.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = g.rewards[i].total;
    rewards.push_back(std::move(r));
    if (!g.kl_sums.empty() && g.kl_sums.size() != g.rewards.size()) {
      throw InvalidArgument("rollout group kl sums must align with rollouts");
    }
    kls.push_back(g.kl_sums.empty() ? std::vector<double>(g.rewards.size(), 0.0) : g.kl_sums);
    any_kl = any_kl || !g.kl_sums.empty();
  }

  if (config.algorithm == Algorithm::reinforce_pp ||
      config.algorithm == Algorithm::reinforce_pp_baseline) {
    return reinforce_pp_transform(rewards, config,
                                  any_kl ? std::span<const std::vector<double>>(kls)
                                         : std::span<const std::vector<double>>());
  }

  std::vector<AdvantageBatch> out;
  out.reserve(groups.size());
  for (std::size_t g = 0; g < rewards.size(); ++g) {
    std::vector<double> shaped = rewards[g];
    for (std::size_t i = 0; i < shaped.size(); ++i) {
      shaped[i] -= config.kl_coef * kls[g][i];
      if (config.reward_clip) shaped[i] = std::clamp(shaped[i], -*config.reward_clip, *config.reward_clip);
    }
    out.push_back(config.algorithm == Algorithm::grpo ? grpo_advantages(shaped, config.epsilon)
                                                      : rloo_advantages(shaped));
  }
  return out;
}

}  // namespace scs
