#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "scs/estimators.hpp"
#include "scs/policy.hpp"
#include "scs/rewards.hpp"
#include "scs/scs_sampler.hpp"
#include "scs/tree_env.hpp"

namespace scs {

struct EnvConfig {
  std::uint64_t seed = 0;
  int n_tasks = 16;
  int depth = 3;
  int branching = 3;
  int n_options = 4;
  ObservationSpec observation;
  std::size_t enumeration_cap = kDefaultEnumerationCap;

  void validate() const;
};

struct TaskSet {
  EnvConfig params;
  std::size_t obs_dim = 0;
  std::vector<TreeTask> tasks;
};

/// Task i uses tree seed hash(env.seed, i) and its own observation stream.
TaskSet generate_task_set(const EnvConfig& env);

struct PolicyConfig {
  double temperature = 1.0;
  double init_weight_std = 0.1;
  /// Added to each node's weight on its own evidence channel (evidence
  /// observations only). 0 keeps the plain random start.
  double evidence_prior = 0.0;
};

Policy initial_policy(const TaskSet& tasks, const PolicyConfig& config, std::uint64_t seed);

enum class OptimizerKind { sgd, adam };

struct TrainerConfig {
  double learning_rate = 1e-2;
  /// Tasks per update; 0 means the whole task set.
  int batch_size = 0;
  /// Rollouts per task; 0 picks the estimator's default.
  int samples_per_prompt = 0;
  int total_steps = 300;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool scs_enabled = true;
  /// Threads used for rollout generation. Results do not depend on it.
  int workers = 1;

  int resolved_samples_per_prompt(Algorithm algorithm) const noexcept;
  int resolved_batch_size(std::size_t n_tasks) const noexcept;
};

/// Gradient-ascent optimiser over policy parameters.
class Optimizer {
 public:
  Optimizer(const TrainerConfig& config, PolicyShape shape);
  void apply(PolicyParameters& parameters, const PolicyParameters& gradient);

 private:
  OptimizerKind kind_;
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long long steps_ = 0;
  PolicyParameters first_moment_;
  PolicyParameters second_moment_;
};

struct StepMetrics {
  int step = 0;
  double mean_total_reward = 0.0;
  double mean_r_acc = 0.0;
  double mean_r_for = 0.0;
  double mean_r_con = 0.0;
  double mean_kl = 0.0;
  /// Exact P(unfaithful | correct) averaged over the task set, after the update.
  double unfaithful_mass = 0.0;
  /// Exact probability of the correct option averaged over the task set, after the update.
  double expected_accuracy = 0.0;
  /// Exact path entropy (nats) averaged over the task set, after the update.
  double policy_entropy = 0.0;
  double gradient_norm = 0.0;
};

struct ResampleTraceRecord {
  int step = 0;
  std::size_t task_index = 0;
  int rollout = 0;
  AnswerSet answers;
};

struct TrainCallbacks {
  std::function<void(const StepMetrics&, const Policy&)> on_step;
  /// Receives every SCS answer set when set; called from the training thread.
  std::function<void(const ResampleTraceRecord&)> on_trace;
};

struct TrainResult {
  Policy policy;
  std::vector<StepMetrics> metrics;
};

/// Checks every configuration combination the trainer depends on. Throws
/// InvalidArgument before any work is done.
void validate_training_setup(const TaskSet& tasks, const Policy& policy,
                             const TrainerConfig& trainer, const SamplerConfig& sampler,
                             const RewardConfig& rewards, const EstimatorConfig& estimator);

TrainResult train(const TaskSet& tasks, Policy policy, const TrainerConfig& trainer,
                  const SamplerConfig& sampler, const RewardConfig& rewards,
                  const EstimatorConfig& estimator, const TrainCallbacks& callbacks = {});

/// P(tau- | y+) = P(y+, tau-) / (P(y+, tau-) + P(y+, tau+)). Returns 0 when
/// the correct option has zero probability.
double unfaithful_posterior(double joint_faithful, double joint_unfaithful);

/// Exact P(tau- | y+) for one task, by enumeration.
double unfaithful_mass(const Policy& policy, const TreeTask& task,
                       std::size_t enumeration_cap = kDefaultEnumerationCap);

/// Exact probability that a sampled path ends on the correct option.
double correct_option_probability(const Policy& policy, const TreeTask& task,
                                  std::size_t enumeration_cap = kDefaultEnumerationCap);

/// Exact entropy (nats) of the path distribution for one task.
double path_entropy(const Policy& policy, const TreeTask& task,
                    std::size_t enumeration_cap = kDefaultEnumerationCap);

}  // namespace scs
