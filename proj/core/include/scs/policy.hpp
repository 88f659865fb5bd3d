#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "scs/random.hpp"
#include "scs/tree_env.hpp"

namespace scs {

struct PolicyShape {
  std::size_t node_count = 0;
  std::size_t branching = 0;
  std::size_t obs_dim = 0;

  /// Parameters owned by one decision node: B biases then a B x d weight matrix.
  std::size_t block_size() const noexcept { return branching * (1 + obs_dim); }
  std::size_t parameter_count() const noexcept { return node_count * block_size(); }

  static PolicyShape for_tree(const ReasoningTree& tree, std::size_t obs_dim);

  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

/// Flat parameter vector in node-blocked layout. Also used for gradients.
class PolicyParameters {
 public:
  PolicyParameters() = default;
  explicit PolicyParameters(PolicyShape shape);
  PolicyParameters(PolicyShape shape, std::vector<double> values);

  const PolicyShape& shape() const noexcept { return shape_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<double> bias(std::size_t node);
  std::span<const double> bias(std::size_t node) const;
  /// Row-major B x d block for `node`.
  std::span<double> weights(std::size_t node);
  std::span<const double> weights(std::size_t node) const;

  PolicyParameters& operator+=(const PolicyParameters& other);
  PolicyParameters& operator*=(double scale) noexcept;
  void add_scaled(const PolicyParameters& other, double scale);
  void set_zero() noexcept;
  double norm() const noexcept;

  friend bool operator==(const PolicyParameters&, const PolicyParameters&) = default;

 private:
  PolicyShape shape_;
  std::vector<double> values_;
};

/// Observation-conditioned softmax policy over tree actions. At decision node
/// n the action distribution is softmax((b_n + W_n x) / temperature).
class Policy {
 public:
  explicit Policy(PolicyShape shape, double temperature = 1.0);
  Policy(PolicyParameters parameters, double temperature = 1.0);

  /// Zero biases, observation weights ~ N(0, weight_std^2).
  static Policy initialize(PolicyShape shape, std::uint64_t seed, double weight_std = 0.1,
                           double temperature = 1.0);

  const PolicyShape& shape() const noexcept { return parameters_.shape(); }
  double temperature() const noexcept { return temperature_; }
  void set_temperature(double temperature);

  PolicyParameters& parameters() noexcept { return parameters_; }
  const PolicyParameters& parameters() const noexcept { return parameters_; }

  /// Tempered logits (b_n + W_n x) / T written into `out` (size B).
  void logits(std::size_t node, std::span<const double> observation, std::span<double> out) const;
  std::vector<double> action_probabilities(std::size_t node, std::span<const double> observation) const;
  std::vector<double> action_log_probabilities(std::size_t node,
                                               std::span<const double> observation) const;

  /// Throws InvalidArgument unless the policy's shape fits `tree` and an
  /// observation of `obs_dim` entries.
  void check_compatible(const ReasoningTree& tree, std::size_t obs_dim) const;
  bool all_finite() const noexcept;

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  PolicyParameters parameters_;
  double temperature_;
};

/// Immutable deep copy of a policy, used as the KL reference.
class PolicySnapshot {
 public:
  explicit PolicySnapshot(const Policy& policy);
  const Policy& policy() const noexcept { return *policy_; }

 private:
  std::shared_ptr<const Policy> policy_;
};

Trajectory sample_trajectory(const Policy& policy, const TreeTask& task, RandomStream& rng);

/// Samples the remainder of a path starting from `prefix`, conditioning on
/// the task's own observation.
Trajectory continue_from_prefix(const Policy& policy, const TreeTask& task,
                                std::span<const int> prefix, RandomStream& rng);

/// As above, conditioning every step (prefix log-probs included) on
/// `observation` instead of the task's observation.
Trajectory continue_from_prefix(const Policy& policy, const TreeTask& task,
                                std::span<const int> prefix, RandomStream& rng,
                                std::span<const double> observation);

double log_prob(const Policy& policy, const TreeTask& task, const Trajectory& trajectory);

PolicyParameters log_prob_gradient(const Policy& policy, const TreeTask& task,
                                   const Trajectory& trajectory);

/// out += scale * grad log pi(trajectory | task).
void accumulate_log_prob_gradient(const Policy& policy, const TreeTask& task,
                                  const Trajectory& trajectory, double scale,
                                  PolicyParameters& out);

/// Sets the biases along `path` so that each step's action has logit
/// `strength` and its siblings 0. Other nodes are untouched.
void saturate_along_path(Policy& policy, const ReasoningTree& tree, std::span<const int> path,
                         double strength = 50.0);

}  // namespace scs
