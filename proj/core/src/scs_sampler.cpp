#include "scs/scs_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "scs/errors.hpp"

namespace scs {

void SamplerConfig::validate() const {
  if (!(truncation_ratio > 0.0 && truncation_ratio < 1.0)) {
    throw InvalidArgument("truncation_ratio must lie in (0, 1)");
  }
  if (n_resamples < 1) throw InvalidArgument("n_resamples must be >= 1");
  if (!(sigma_min >= 0.0) || !(sigma_max >= sigma_min) || !std::isfinite(sigma_max)) {
    throw InvalidArgument("perturbation range must satisfy 0 <= sigma_min <= sigma_max");
  }
}

std::size_t truncated_length(std::size_t length, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw InvalidArgument("truncation ratio must lie in (0, 1)");
  if (length == 0) return 0;
  // The epsilon keeps ratios such as 0.7 * 10 from flooring to 6.
  const auto kept = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(length) + 1e-9));
  return std::min(kept, length - 1);
}

ActionPath truncate(const Trajectory& trajectory, double ratio) {
  if (!trajectory.is_complete) throw InvalidArgument("cannot truncate an incomplete trajectory");
  const std::size_t kept = truncated_length(trajectory.actions.size(), ratio);
  return ActionPath(trajectory.actions.begin(),
                    trajectory.actions.begin() + static_cast<std::ptrdiff_t>(kept));
}

PerturbedObservation perturb_observation(std::span<const double> observation, double sigma_min,
                                         double sigma_max, RandomStream& rng) {
  if (!(sigma_min <= sigma_max)) throw InvalidArgument("sigma_min must not exceed sigma_max");
  PerturbedObservation out;
  out.sigma = rng.uniform(sigma_min, sigma_max);
  out.values.assign(observation.begin(), observation.end());
  if (out.sigma > 0.0) {
    for (double& v : out.values) v += out.sigma * rng.normal();
  }
  return out;
}

int count_distinct(std::span<const int> labels) {
  std::vector<int> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

AnswerSet collect_answers(const Policy& policy, const TreeTask& task, const Trajectory& trajectory,
                          const SamplerConfig& config, const RandomStream& rng) {
  config.validate();
  const ActionPath prefix = truncate(trajectory, config.truncation_ratio);

  AnswerSet set;
  set.prefix_length = prefix.size();
  set.answers.reserve(static_cast<std::size_t>(config.n_resamples));
  set.trace.reserve(static_cast<std::size_t>(config.n_resamples));
  for (int i = 0; i < config.n_resamples; ++i) {
    RandomStream stream = rng.substream({static_cast<std::uint64_t>(i)});
    const auto noisy = perturb_observation(task.observation, config.sigma_min, config.sigma_max, stream);
    const Trajectory continuation = continue_from_prefix(policy, task, prefix, stream, noisy.values);
    const int answer = *continuation.terminal_option;
    set.answers.push_back(answer);
    set.trace.push_back({noisy.sigma, answer});
  }
  set.distinct_count = count_distinct(set.answers);
  return set;
}

}  // namespace scs
