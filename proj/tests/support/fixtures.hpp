#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "scs/policy.hpp"
#include "scs/random.hpp"
#include "scs/trainer.hpp"
#include "scs/tree_env.hpp"

namespace scs::testing {

inline std::vector<double> gaussian_observation(std::size_t dim, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> obs(dim);
  for (double& v : obs) v = rng.normal();
  return obs;
}

/// Random tree paired with a Gaussian observation of `obs_dim` features.
inline TreeTask random_task(std::uint64_t seed, int depth, int branching, int n_options,
                            std::size_t obs_dim = 4) {
  ReasoningTree tree = generate_tree(seed, depth, branching, n_options);
  return make_task(std::move(tree), gaussian_observation(obs_dim, seed ^ 0x9e37u), "t" + std::to_string(seed));
}

inline Policy random_policy(const TreeTask& task, std::uint64_t seed, double weight_std = 0.5) {
  const PolicyShape shape = PolicyShape::for_tree(task.tree, task.observation.size());
  Policy policy = Policy::initialize(shape, seed, weight_std);
  RandomStream rng(seed + 17);
  for (std::size_t n = 0; n < shape.node_count; ++n) {
    for (double& b : policy.parameters().bias(n)) b = 0.5 * rng.normal();
  }
  return policy;
}

inline Policy uniform_policy(const TreeTask& task) {
  return Policy(PolicyShape::for_tree(task.tree, task.observation.size()));
}

/// Uniform policy with biases saturated along the faithful path.
inline Policy saturated_faithful_policy(const TreeTask& task, double strength = 50.0) {
  Policy policy = uniform_policy(task);
  saturate_along_path(policy, task.tree, task.tree.faithful_path(), strength);
  return policy;
}

/// Central differences of `f` with respect to every coordinate in `coords`.
inline std::vector<double> central_differences(Policy policy, const std::function<double(const Policy&)>& f,
                                               const std::vector<std::size_t>& coords, double h = 1e-5) {
  std::vector<double> out;
  out.reserve(coords.size());
  auto values = policy.parameters().values();
  for (std::size_t i : coords) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = f(policy);
    values[i] = saved - h;
    const double down = f(policy);
    values[i] = saved;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps coordinates whose true
/// derivative is zero from dividing rounding noise by zero.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline std::vector<std::size_t> all_coordinates(const Policy& policy) {
  std::vector<std::size_t> coords(policy.shape().parameter_count());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  return coords;
}

inline std::vector<std::size_t> sampled_coordinates(const Policy& policy, std::size_t count, std::uint64_t seed) {
  const std::size_t total = policy.shape().parameter_count();
  if (count >= total) return all_coordinates(policy);
  RandomStream rng(seed);
  std::vector<std::size_t> coords;
  for (std::size_t i = 0; i < count; ++i) coords.push_back(rng.below(total));
  return coords;
}

inline EnvConfig small_env(std::uint64_t seed = 3, int n_tasks = 4) {
  EnvConfig env;
  env.seed = seed;
  env.n_tasks = n_tasks;
  env.depth = 2;
  env.branching = 3;
  env.n_options = 3;
  return env;
}

}  // namespace scs::testing
