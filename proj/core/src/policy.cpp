#include "scs/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scs/errors.hpp"

namespace scs {
namespace {

double log_sum_exp(std::span<const double> xs) {
  const double hi = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - hi);
  return hi + std::log(s);
}

void check_trajectory(const ReasoningTree& tree, const Trajectory& trajectory) {
  if (!tree.is_complete_path(trajectory.actions)) {
    throw InvalidArgument("trajectory is not a complete path of the task's tree");
  }
}

}  // namespace

PolicyShape PolicyShape::for_tree(const ReasoningTree& tree, std::size_t obs_dim) {
  return PolicyShape{tree.node_count(), static_cast<std::size_t>(tree.branching()), obs_dim};
}

PolicyParameters::PolicyParameters(PolicyShape shape)
    : shape_(shape), values_(shape.parameter_count(), 0.0) {}

PolicyParameters::PolicyParameters(PolicyShape shape, std::vector<double> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != shape_.parameter_count()) {
    throw InvalidArgument("parameter vector size does not match policy shape");
  }
}

std::span<double> PolicyParameters::bias(std::size_t node) {
  return std::span<double>(values_).subspan(node * shape_.block_size(), shape_.branching);
}

std::span<const double> PolicyParameters::bias(std::size_t node) const {
  return std::span<const double>(values_).subspan(node * shape_.block_size(), shape_.branching);
}

std::span<double> PolicyParameters::weights(std::size_t node) {
  return std::span<double>(values_).subspan(node * shape_.block_size() + shape_.branching,
                                            shape_.branching * shape_.obs_dim);
}

std::span<const double> PolicyParameters::weights(std::size_t node) const {
  return std::span<const double>(values_).subspan(node * shape_.block_size() + shape_.branching,
                                                  shape_.branching * shape_.obs_dim);
}

PolicyParameters& PolicyParameters::operator+=(const PolicyParameters& other) {
  add_scaled(other, 1.0);
  return *this;
}

PolicyParameters& PolicyParameters::operator*=(double scale) noexcept {
  for (double& v : values_) v *= scale;
  return *this;
}

void PolicyParameters::add_scaled(const PolicyParameters& other, double scale) {
  if (other.shape_ != shape_) throw InvalidArgument("parameter shapes differ");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
}

void PolicyParameters::set_zero() noexcept { std::fill(values_.begin(), values_.end(), 0.0); }

double PolicyParameters::norm() const noexcept {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

Policy::Policy(PolicyShape shape, double temperature)
    : Policy(PolicyParameters(shape), temperature) {}

Policy::Policy(PolicyParameters parameters, double temperature)
    : parameters_(std::move(parameters)), temperature_(1.0) {
  if (shape().branching < 2) throw InvalidArgument("policy branching must be >= 2");
  set_temperature(temperature);
}

Policy Policy::initialize(PolicyShape shape, std::uint64_t seed, double weight_std,
                          double temperature) {
  if (!(weight_std >= 0.0)) throw InvalidArgument("weight_std must be non-negative");
  Policy policy(shape, temperature);
  RandomStream rng = RandomStream(seed).substream({key(StreamTag::policy_init)});
  for (std::size_t node = 0; node < shape.node_count; ++node) {
    for (double& w : policy.parameters_.weights(node)) w = weight_std * rng.normal();
  }
  return policy;
}

void Policy::set_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidArgument("policy temperature must be a finite positive number");
  }
  temperature_ = temperature;
}

void Policy::logits(std::size_t node, std::span<const double> observation,
                    std::span<double> out) const {
  const auto& s = shape();
  const auto b = parameters_.bias(node);
  const auto w = parameters_.weights(node);
  for (std::size_t a = 0; a < s.branching; ++a) {
    const double* row = w.data() + a * s.obs_dim;
    double z = b[a];
    for (std::size_t j = 0; j < s.obs_dim; ++j) z += row[j] * observation[j];
    out[a] = z / temperature_;
  }
}

std::vector<double> Policy::action_probabilities(std::size_t node,
                                                 std::span<const double> observation) const {
  std::vector<double> p(shape().branching);
  logits(node, observation, p);
  const double hi = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<double> Policy::action_log_probabilities(std::size_t node,
                                                     std::span<const double> observation) const {
  std::vector<double> z(shape().branching);
  logits(node, observation, z);
  const double lse = log_sum_exp(z);
  for (double& v : z) v -= lse;
  return z;
}

void Policy::check_compatible(const ReasoningTree& tree, std::size_t obs_dim) const {
  const auto& s = shape();
  if (s.node_count != tree.node_count() || s.branching != static_cast<std::size_t>(tree.branching())) {
    throw InvalidArgument("policy shape does not match the tree");
  }
  if (s.obs_dim != obs_dim) throw InvalidArgument("observation dimension does not match policy");
}

bool Policy::all_finite() const noexcept {
  const auto v = parameters_.values();
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

PolicySnapshot::PolicySnapshot(const Policy& policy)
    : policy_(std::make_shared<const Policy>(policy)) {}

Trajectory sample_trajectory(const Policy& policy, const TreeTask& task, RandomStream& rng) {
  return continue_from_prefix(policy, task, {}, rng, task.observation);
}

Trajectory continue_from_prefix(const Policy& policy, const TreeTask& task,
                                std::span<const int> prefix, RandomStream& rng) {
  return continue_from_prefix(policy, task, prefix, rng, task.observation);
}

Trajectory continue_from_prefix(const Policy& policy, const TreeTask& task,
                                std::span<const int> prefix, RandomStream& rng,
                                std::span<const double> observation) {
  const ReasoningTree& tree = task.tree;
  if (!tree.is_valid_prefix(prefix)) throw InvalidArgument("invalid prefix for task tree");
  policy.check_compatible(tree, observation.size());

  const auto depth = static_cast<std::size_t>(tree.depth());
  ActionPath actions(prefix.begin(), prefix.end());
  actions.reserve(depth);
  std::vector<double> logprobs;
  logprobs.reserve(depth);

  std::size_t node = 0;
  for (std::size_t step = 0; step < depth; ++step) {
    const auto logp = policy.action_log_probabilities(node, observation);
    int action;
    if (step < prefix.size()) {
      action = prefix[step];
    } else {
      // Inverse-CDF draw; the last action absorbs rounding slack.
      const double u = rng.uniform();
      double cumulative = 0.0;
      action = static_cast<int>(logp.size()) - 1;
      for (std::size_t a = 0; a + 1 < logp.size(); ++a) {
        cumulative += std::exp(logp[a]);
        if (u < cumulative) {
          action = static_cast<int>(a);
          break;
        }
      }
      actions.push_back(action);
    }
    logprobs.push_back(logp[static_cast<std::size_t>(action)]);
    node = node * static_cast<std::size_t>(tree.branching()) + static_cast<std::size_t>(action) + 1;
  }
  return make_trajectory(tree, std::move(actions), std::move(logprobs));
}

double log_prob(const Policy& policy, const TreeTask& task, const Trajectory& trajectory) {
  check_trajectory(task.tree, trajectory);
  policy.check_compatible(task.tree, task.observation.size());
  double total = 0.0;
  const std::span<const int> actions = trajectory.actions;
  for (std::size_t step = 0; step < actions.size(); ++step) {
    const auto logp = policy.action_log_probabilities(task.tree.node_index(actions.first(step)),
                                                      task.observation);
    total += logp[static_cast<std::size_t>(actions[step])];
  }
  return total;
}

PolicyParameters log_prob_gradient(const Policy& policy, const TreeTask& task,
                                   const Trajectory& trajectory) {
  PolicyParameters grad(policy.shape());
  accumulate_log_prob_gradient(policy, task, trajectory, 1.0, grad);
  return grad;
}

void accumulate_log_prob_gradient(const Policy& policy, const TreeTask& task,
                                  const Trajectory& trajectory, double scale,
                                  PolicyParameters& out) {
  check_trajectory(task.tree, trajectory);
  policy.check_compatible(task.tree, task.observation.size());
  if (out.shape() != policy.shape()) throw InvalidArgument("gradient shape mismatch");

  const auto& s = policy.shape();
  const std::span<const double> obs = task.observation;
  const std::span<const int> actions = trajectory.actions;
  const double inv_t = scale / policy.temperature();
  for (std::size_t step = 0; step < actions.size(); ++step) {
    const std::size_t node = task.tree.node_index(actions.first(step));
    const auto probs = policy.action_probabilities(node, obs);
    auto gb = out.bias(node);
    auto gw = out.weights(node);
    for (std::size_t a = 0; a < s.branching; ++a) {
      const double indicator = static_cast<std::size_t>(actions[step]) == a ? 1.0 : 0.0;
      const double coeff = (indicator - probs[a]) * inv_t;
      gb[a] += coeff;
      double* row = gw.data() + a * s.obs_dim;
      for (std::size_t j = 0; j < s.obs_dim; ++j) row[j] += coeff * obs[j];
    }
  }
}

void saturate_along_path(Policy& policy, const ReasoningTree& tree, std::span<const int> path,
                         double strength) {
  if (!tree.is_valid_prefix(path)) throw InvalidArgument("invalid path for saturation");
  for (std::size_t step = 0; step < path.size(); ++step) {
    auto b = policy.parameters().bias(tree.node_index(path.first(step)));
    std::fill(b.begin(), b.end(), 0.0);
    b[static_cast<std::size_t>(path[step])] = strength;
  }
}

}  // namespace scs
