#include "scs/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "scs/errors.hpp"
#include "scs/oracles.hpp"
#include "scs/random.hpp"

namespace scs {
namespace {

struct RolloutSlot {
  Trajectory trajectory;
  RewardBreakdown reward;
  double kl_sum = 0.0;
  std::optional<AnswerSet> answers;
};

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void EnvConfig::validate() const {
  if (n_tasks < 1) throw InvalidArgument("env.n_tasks must be >= 1");
  if (depth < 1 || branching < 2 || n_options < 2) {
    throw InvalidArgument("env requires depth >= 1, branching >= 2, n_options >= 2");
  }
  if (observation.mode == ObservationMode::gaussian && observation.dim == 0) {
    throw InvalidArgument("env.obs_dim must be >= 1 for gaussian observations");
  }
  if (!(observation.clutter_std >= 0.0) || !std::isfinite(observation.evidence_strength)) {
    throw InvalidArgument("env observation noise must be finite and non-negative");
  }
}

TaskSet generate_task_set(const EnvConfig& env) {
  env.validate();
  TaskSet set;
  set.params = env;
  set.obs_dim = observation_dim(env.observation, env.depth, env.branching);
  const RandomStream root(env.seed);
  set.tasks.reserve(static_cast<std::size_t>(env.n_tasks));
  for (int i = 0; i < env.n_tasks; ++i) {
    const auto index = static_cast<std::uint64_t>(i);
    const std::uint64_t tree_seed = root.substream({key(StreamTag::tree), index}).seed();
    ReasoningTree tree = generate_tree(tree_seed, env.depth, env.branching, env.n_options);
    RandomStream obs_rng = root.substream({key(StreamTag::observation), index});
    auto obs = make_observation(tree, env.observation, obs_rng);
    set.tasks.push_back(make_task(std::move(tree), std::move(obs), "task-" + std::to_string(i)));
  }
  return set;
}

Policy initial_policy(const TaskSet& tasks, const PolicyConfig& config, std::uint64_t seed) {
  if (tasks.tasks.empty()) throw InvalidArgument("task set is empty");
  const PolicyShape shape = PolicyShape::for_tree(tasks.tasks.front().tree, tasks.obs_dim);
  Policy policy = Policy::initialize(shape, seed, config.init_weight_std, config.temperature);
  if (config.evidence_prior != 0.0) {
    if (tasks.params.observation.mode != ObservationMode::evidence) {
      throw InvalidArgument("evidence_prior requires evidence observations");
    }
    const auto branching = static_cast<std::size_t>(shape.branching);
    for (std::size_t node = 0; node < shape.node_count; ++node) {
      auto weights = policy.parameters().weights(node);
      for (std::size_t a = 0; a < branching; ++a) weights[a * shape.obs_dim + node * branching + a] += config.evidence_prior;
    }
  }
  return policy;
}

int TrainerConfig::resolved_samples_per_prompt(Algorithm algorithm) const noexcept {
  return samples_per_prompt > 0 ? samples_per_prompt : default_samples_per_prompt(algorithm);
}

int TrainerConfig::resolved_batch_size(std::size_t n_tasks) const noexcept {
  return batch_size > 0 ? batch_size : static_cast<int>(n_tasks);
}

Optimizer::Optimizer(const TrainerConfig& config, PolicyShape shape)
    : kind_(config.optimizer),
      learning_rate_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      epsilon_(config.adam_epsilon) {
  if (kind_ == OptimizerKind::adam) {
    first_moment_ = PolicyParameters(shape);
    second_moment_ = PolicyParameters(shape);
  }
}

void Optimizer::apply(PolicyParameters& parameters, const PolicyParameters& gradient) {
  if (kind_ == OptimizerKind::sgd) {
    parameters.add_scaled(gradient, learning_rate_);
    return;
  }
  ++steps_;
  const auto g = gradient.values();
  auto m = first_moment_.values();
  auto v = second_moment_.values();
  auto theta = parameters.values();
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
    theta[i] += learning_rate_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_);
  }
}

double unfaithful_posterior(double joint_faithful, double joint_unfaithful) {
  if (!(joint_faithful >= 0.0) || !(joint_unfaithful >= 0.0)) {
    throw InvalidArgument("joint probabilities must be non-negative");
  }
  const double denom = joint_faithful + joint_unfaithful;
  return denom > 0.0 ? joint_unfaithful / denom : 0.0;
}

double unfaithful_mass(const Policy& policy, const TreeTask& task, std::size_t enumeration_cap) {
  const auto paths = enumerate_trajectories(task.tree, enumeration_cap);
  double faithful = 0.0;
  double unfaithful = 0.0;
  for (const auto& path : paths) {
    if (task.tree.option_at(path) != task.correct_option) continue;
    const double p = trajectory_probability(task.tree, policy, task.observation, path);
    (task.tree.is_faithful(path) ? faithful : unfaithful) += p;
  }
  return unfaithful_posterior(faithful, unfaithful);
}

double correct_option_probability(const Policy& policy, const TreeTask& task,
                                  std::size_t enumeration_cap) {
  const auto paths = enumerate_trajectories(task.tree, enumeration_cap);
  double p = 0.0;
  for (const auto& path : paths) {
    if (task.tree.option_at(path) == task.correct_option) {
      p += trajectory_probability(task.tree, policy, task.observation, path);
    }
  }
  return p;
}

double path_entropy(const Policy& policy, const TreeTask& task, std::size_t enumeration_cap) {
  const auto paths = enumerate_trajectories(task.tree, enumeration_cap);
  double h = 0.0;
  for (const auto& path : paths) {
    const double p = trajectory_probability(task.tree, policy, task.observation, path);
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

void validate_training_setup(const TaskSet& tasks, const Policy& policy,
                             const TrainerConfig& trainer, const SamplerConfig& sampler,
                             const RewardConfig& rewards, const EstimatorConfig& estimator) {
  if (tasks.tasks.empty()) throw InvalidArgument("task set is empty");
  if (!(trainer.learning_rate >= 0.0) || !std::isfinite(trainer.learning_rate)) {
    throw InvalidArgument("trainer.learning_rate must be finite and non-negative");
  }
  if (trainer.total_steps < 0) throw InvalidArgument("trainer.total_steps must be >= 0");
  if (trainer.batch_size < 0 || trainer.resolved_batch_size(tasks.tasks.size()) >
                                    static_cast<int>(tasks.tasks.size())) {
    throw InvalidArgument("trainer.batch_size must lie in [0, n_tasks]");
  }
  if (trainer.samples_per_prompt < 0) throw InvalidArgument("trainer.samples_per_prompt must be >= 0");
  if (trainer.workers < 1) throw InvalidArgument("trainer.workers must be >= 1");
  if (trainer.optimizer == OptimizerKind::adam &&
      !(trainer.adam_beta1 >= 0.0 && trainer.adam_beta1 < 1.0 && trainer.adam_beta2 >= 0.0 &&
        trainer.adam_beta2 < 1.0 && trainer.adam_epsilon > 0.0)) {
    throw InvalidArgument("adam hyper-parameters out of range");
  }
  estimator.validate();
  rewards.validate();
  if (trainer.scs_enabled) sampler.validate();
  const int k = trainer.resolved_samples_per_prompt(estimator.algorithm);
  if ((estimator.algorithm == Algorithm::grpo || estimator.algorithm == Algorithm::rloo) && k < 2) {
    throw InvalidArgument(std::string(to_string(estimator.algorithm)) +
                          " needs samples_per_prompt >= 2");
  }
  if (!policy.all_finite()) throw InvalidArgument("initial policy has non-finite parameters");
  for (const auto& task : tasks.tasks) {
    policy.check_compatible(task.tree, task.observation.size());
    if (task.tree.leaf_count() > tasks.params.enumeration_cap) {
      throw EnumerationInfeasible("task " + task.task_id + " exceeds the enumeration cap");
    }
  }
}

TrainResult train(const TaskSet& tasks, Policy policy, const TrainerConfig& trainer,
                  const SamplerConfig& sampler, const RewardConfig& rewards,
                  const EstimatorConfig& estimator, const TrainCallbacks& callbacks) {
  validate_training_setup(tasks, policy, trainer, sampler, rewards, estimator);

  const std::size_t n_tasks = tasks.tasks.size();
  const auto batch = static_cast<std::size_t>(trainer.resolved_batch_size(n_tasks));
  const auto k = static_cast<std::size_t>(trainer.resolved_samples_per_prompt(estimator.algorithm));
  const bool use_kl = estimator.kl_coef > 0.0;
  const PolicySnapshot reference(policy);
  const RandomStream master(trainer.seed);
  Optimizer optimizer(trainer, policy.shape());

  TrainResult result{policy, {}};
  result.metrics.reserve(static_cast<std::size_t>(trainer.total_steps));
  std::vector<RolloutSlot> slots(batch * k);
  PolicyParameters gradient(policy.shape());

  for (int step = 0; step < trainer.total_steps; ++step) {
    const auto step_key = static_cast<std::uint64_t>(step);
    auto task_index = [&](std::size_t b) { return (static_cast<std::size_t>(step) * batch + b) % n_tasks; };

    // Rollout phase: read-only on the policy, one keyed stream per rollout.
    parallel_for(slots.size(), trainer.workers, [&](std::size_t slot) {
      const std::size_t b = slot / k;
      const std::size_t rollout = slot % k;
      const std::size_t t = task_index(b);
      const TreeTask& task = tasks.tasks[t];
      RandomStream rng = master.substream({key(StreamTag::rollout), step_key, t, rollout});
      RolloutSlot& out = slots[slot];
      out.trajectory = sample_trajectory(policy, task, rng);
      out.answers.reset();
      if (trainer.scs_enabled) {
        out.answers = collect_answers(policy, task, out.trajectory, sampler,
                                      master.substream({key(StreamTag::resample), step_key, t, rollout}));
      }
      out.reward = compose(task, out.trajectory, out.answers ? &*out.answers : nullptr,
                           sampler.n_resamples, rewards);
      out.kl_sum = 0.0;
      if (use_kl) {
        const auto kl = kl_penalty_k3(policy, reference, task, out.trajectory);
        out.kl_sum = std::accumulate(kl.begin(), kl.end(), 0.0);
      }
    });

    std::vector<RolloutGroup> groups(batch);
    for (std::size_t b = 0; b < batch; ++b) {
      RolloutGroup& g = groups[b];
      g.task_id = tasks.tasks[task_index(b)].task_id;
      for (std::size_t r = 0; r < k; ++r) {
        const RolloutSlot& s = slots[b * k + r];
        g.rollouts.push_back(s.trajectory);
        g.rewards.push_back(s.reward);
        if (use_kl) g.kl_sums.push_back(s.kl_sum);
      }
    }
    const auto advantages = compute_advantages(groups, estimator);

    StepMetrics m;
    m.step = step;
    gradient.set_zero();
    const double inv_count = 1.0 / static_cast<double>(slots.size());
    for (std::size_t b = 0; b < batch; ++b) {
      const TreeTask& task = tasks.tasks[task_index(b)];
      for (std::size_t r = 0; r < k; ++r) {
        const RolloutSlot& s = slots[b * k + r];
        m.mean_total_reward += s.reward.total;
        m.mean_r_acc += s.reward.r_acc;
        m.mean_r_for += s.reward.r_for;
        m.mean_r_con += s.reward.r_con;
        m.mean_kl += s.kl_sum;
        const double a = advantages[b].advantages[r];
        if (a != 0.0) accumulate_log_prob_gradient(policy, task, s.trajectory, a * inv_count, gradient);
        if (callbacks.on_trace && s.answers) {
          callbacks.on_trace({step, task_index(b), static_cast<int>(r), *s.answers});
        }
      }
    }
    m.mean_total_reward *= inv_count;
    m.mean_r_acc *= inv_count;
    m.mean_r_for *= inv_count;
    m.mean_r_con *= inv_count;
    m.mean_kl *= inv_count;
    m.gradient_norm = gradient.norm();

    optimizer.apply(policy.parameters(), gradient);
    if (!policy.all_finite()) {
      throw Error("policy parameters became non-finite at step " + std::to_string(step));
    }

    for (const auto& task : tasks.tasks) {
      m.unfaithful_mass += unfaithful_mass(policy, task, tasks.params.enumeration_cap);
      m.expected_accuracy += correct_option_probability(policy, task, tasks.params.enumeration_cap);
      m.policy_entropy += path_entropy(policy, task, tasks.params.enumeration_cap);
    }
    m.expected_accuracy /= static_cast<double>(n_tasks);
    m.unfaithful_mass /= static_cast<double>(n_tasks);
    m.policy_entropy /= static_cast<double>(n_tasks);

    result.metrics.push_back(m);
    if (callbacks.on_step) callbacks.on_step(m, policy);
  }
  result.policy = std::move(policy);
  return result;
}

}  // namespace scs
