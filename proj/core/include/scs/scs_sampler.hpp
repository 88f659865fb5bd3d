#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scs/policy.hpp"
#include "scs/random.hpp"
#include "scs/tree_env.hpp"

namespace scs {

/// Self-consistency sampling knobs: keep floor(k * L) actions of the initial
/// trajectory, then draw m continuations, each under a fresh observation
/// perturbation with sigma ~ U(sigma_min, sigma_max).
struct SamplerConfig {
  double truncation_ratio = 0.8;
  int n_resamples = 4;
  double sigma_min = 0.0;
  double sigma_max = 0.5;

  void validate() const;
};

struct ResampleTrace {
  double sigma = 0.0;
  int answer = 0;
};

struct AnswerSet {
  std::vector<int> answers;
  int distinct_count = 0;
  std::size_t prefix_length = 0;
  std::vector<ResampleTrace> trace;
};

struct PerturbedObservation {
  std::vector<double> values;
  double sigma = 0.0;
};

/// Prefix of floor(k * L) actions, clamped to [0, L - 1] so the final step is
/// always regenerated.
ActionPath truncate(const Trajectory& trajectory, double ratio);
std::size_t truncated_length(std::size_t length, double ratio);

PerturbedObservation perturb_observation(std::span<const double> observation, double sigma_min,
                                         double sigma_max, RandomStream& rng);

/// Resample i draws from rng.substream({i}), so iterations are independent of
/// each other and of the order they run in.
AnswerSet collect_answers(const Policy& policy, const TreeTask& task, const Trajectory& trajectory,
                          const SamplerConfig& config, const RandomStream& rng);

int count_distinct(std::span<const int> labels);

}  // namespace scs
