#include "scs/tree_env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scs/errors.hpp"
#include "scs/policy.hpp"
#include "scs/random.hpp"

namespace scs {
namespace {

// Generation refuses trees whose leaf map would not fit comfortably in memory.
constexpr std::size_t kMaxGeneratedLeaves = std::size_t{1} << 24;

}  // namespace

std::optional<std::size_t> leaf_count_for(int depth, int branching) noexcept {
  if (depth < 0 || branching < 1) return std::nullopt;
  std::size_t count = 1;
  for (int i = 0; i < depth; ++i) {
    if (count > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(branching)) {
      return std::nullopt;
    }
    count *= static_cast<std::size_t>(branching);
  }
  return count;
}

ReasoningTree::ReasoningTree(int depth, int branching, int n_options,
                             std::vector<int> leaf_option_map, ActionPath faithful_path,
                             std::uint64_t seed)
    : depth_(depth),
      branching_(branching),
      n_options_(n_options),
      seed_(seed),
      node_count_(0),
      leaf_option_map_(std::move(leaf_option_map)),
      faithful_path_(std::move(faithful_path)),
      correct_option_(0) {
  if (depth_ < 1) throw InvalidArgument("tree depth must be >= 1");
  if (branching_ < 2) throw InvalidArgument("tree branching must be >= 2");
  if (n_options_ < 2) throw InvalidArgument("tree must have at least 2 options");
  const auto leaves = leaf_count_for(depth_, branching_);
  if (!leaves || leaf_option_map_.size() != *leaves) {
    throw InvalidArgument("leaf_option_map size must equal branching^depth");
  }
  node_count_ = (*leaves - 1) / static_cast<std::size_t>(branching_ - 1);

  std::vector<bool> seen(static_cast<std::size_t>(n_options_), false);
  for (int label : leaf_option_map_) {
    if (label < 0 || label >= n_options_) {
      throw InvalidArgument("leaf option label out of range [0, n_options)");
    }
    seen[static_cast<std::size_t>(label)] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool s) { return s; })) {
    throw InvalidArgument("every option label must be reachable from some leaf");
  }
  if (!is_complete_path(faithful_path_)) {
    throw InvalidArgument("faithful_path must be a complete root-to-leaf path");
  }
  correct_option_ = option_at(faithful_path_);
}

bool ReasoningTree::is_valid_prefix(std::span<const int> actions) const noexcept {
  if (actions.size() > static_cast<std::size_t>(depth_)) return false;
  return std::all_of(actions.begin(), actions.end(),
                     [this](int a) { return a >= 0 && a < branching_; });
}

bool ReasoningTree::is_complete_path(std::span<const int> actions) const noexcept {
  return actions.size() == static_cast<std::size_t>(depth_) && is_valid_prefix(actions);
}

bool ReasoningTree::is_faithful(std::span<const int> actions) const noexcept {
  return std::equal(actions.begin(), actions.end(), faithful_path_.begin(), faithful_path_.end());
}

std::size_t ReasoningTree::node_index(std::span<const int> prefix) const {
  if (prefix.size() >= static_cast<std::size_t>(depth_) || !is_valid_prefix(prefix)) {
    throw InvalidArgument("prefix does not end at a decision node");
  }
  std::size_t node = 0;
  for (int a : prefix) node = node * static_cast<std::size_t>(branching_) + static_cast<std::size_t>(a) + 1;
  return node;
}

std::size_t ReasoningTree::leaf_index(std::span<const int> path) const {
  if (!is_complete_path(path)) throw InvalidArgument("not a complete root-to-leaf path");
  std::size_t leaf = 0;
  for (int a : path) leaf = leaf * static_cast<std::size_t>(branching_) + static_cast<std::size_t>(a);
  return leaf;
}

int ReasoningTree::option_at(std::span<const int> path) const {
  return leaf_option_map_[leaf_index(path)];
}

TreeTask make_task(ReasoningTree tree, std::vector<double> observation, std::string task_id) {
  if (!std::all_of(observation.begin(), observation.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("task observation must be finite");
  }
  const int correct = tree.correct_option();
  return TreeTask{std::move(tree), std::move(observation), correct, std::move(task_id)};
}

double Trajectory::log_prob() const noexcept {
  return std::accumulate(step_logprobs.begin(), step_logprobs.end(), 0.0);
}

Trajectory make_trajectory(const ReasoningTree& tree, ActionPath actions,
                           std::vector<double> step_logprobs) {
  if (!tree.is_valid_prefix(actions)) throw InvalidArgument("actions are not a valid tree path");
  if (!step_logprobs.empty() && step_logprobs.size() != actions.size()) {
    throw InvalidArgument("step_logprobs must align with actions");
  }
  Trajectory t;
  t.is_complete = tree.is_complete_path(actions);
  t.is_faithful = t.is_complete && tree.is_faithful(actions);
  if (t.is_complete) t.terminal_option = tree.option_at(actions);
  t.actions = std::move(actions);
  t.step_logprobs = std::move(step_logprobs);
  return t;
}

ReasoningTree generate_tree(std::uint64_t seed, int depth, int branching, int n_options) {
  if (depth < 1 || branching < 2 || n_options < 2) {
    throw InvalidArgument("generate_tree requires depth >= 1, branching >= 2, n_options >= 2");
  }
  const auto leaves = leaf_count_for(depth, branching);
  if (!leaves || *leaves > kMaxGeneratedLeaves) {
    throw InvalidArgument("tree too large to generate");
  }
  if (static_cast<std::size_t>(n_options) > *leaves) {
    throw InvalidArgument("n_options exceeds leaf count; options cannot all be covered");
  }

  RandomStream rng = RandomStream(seed).substream({key(StreamTag::tree)});
  ActionPath faithful(static_cast<std::size_t>(depth));
  for (int& a : faithful) a = static_cast<int>(rng.below(static_cast<std::uint64_t>(branching)));
  const int correct = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_options)));

  std::size_t faithful_leaf = 0;
  for (int a : faithful) faithful_leaf = faithful_leaf * static_cast<std::size_t>(branching) + static_cast<std::size_t>(a);

  std::vector<int> labels(*leaves);
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_options), 0);
  for (std::size_t leaf = 0; leaf < labels.size(); ++leaf) {
    labels[leaf] = leaf == faithful_leaf
                       ? correct
                       : static_cast<int>(rng.below(static_cast<std::uint64_t>(n_options)));
    ++counts[static_cast<std::size_t>(labels[leaf])];
  }

  // Coverage repair: hand each missing option to a random non-faithful leaf
  // whose current label occurs more than once.
  for (int option = 0; option < n_options; ++option) {
    if (counts[static_cast<std::size_t>(option)] > 0) continue;
    std::vector<std::size_t> donors;
    for (std::size_t leaf = 0; leaf < labels.size(); ++leaf) {
      if (leaf != faithful_leaf && counts[static_cast<std::size_t>(labels[leaf])] > 1) {
        donors.push_back(leaf);
      }
    }
    const std::size_t pick = donors[rng.below(donors.size())];
    --counts[static_cast<std::size_t>(labels[pick])];
    labels[pick] = option;
    ++counts[static_cast<std::size_t>(option)];
  }

  return ReasoningTree(depth, branching, n_options, std::move(labels), std::move(faithful), seed);
}

void require_enumerable(int depth, int branching, std::size_t cap) {
  const auto leaves = leaf_count_for(depth, branching);
  if (!leaves || *leaves > cap) {
    throw EnumerationInfeasible("a depth-" + std::to_string(depth) + " branching-" + std::to_string(branching) +
                                " tree exceeds the enumeration cap of " + std::to_string(cap) + " paths");
  }
}

std::vector<ActionPath> enumerate_trajectories(const ReasoningTree& tree, std::size_t cap) {
  require_enumerable(tree.depth(), tree.branching(), cap);
  const auto depth = static_cast<std::size_t>(tree.depth());
  const auto branching = static_cast<std::size_t>(tree.branching());
  std::vector<ActionPath> paths;
  paths.reserve(tree.leaf_count());
  for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
    ActionPath path(depth);
    std::size_t rest = leaf;
    for (std::size_t i = depth; i-- > 0;) {
      path[i] = static_cast<int>(rest % branching);
      rest /= branching;
    }
    paths.push_back(std::move(path));
  }
  return paths;
}

double trajectory_probability(const ReasoningTree& tree, const Policy& policy,
                              std::span<const double> observation, std::span<const int> actions) {
  if (!tree.is_complete_path(actions)) {
    throw InvalidArgument("trajectory_probability requires a complete root-to-leaf path");
  }
  policy.check_compatible(tree, observation.size());
  double prob = 1.0;
  for (std::size_t step = 0; step < actions.size(); ++step) {
    const auto node = tree.node_index(actions.first(step));
    const auto probs = policy.action_probabilities(node, observation);
    prob *= probs[static_cast<std::size_t>(actions[step])];
  }
  return prob;
}

std::size_t observation_dim(const ObservationSpec& spec, int depth, int branching) {
  if (spec.mode == ObservationMode::gaussian) return spec.dim;
  const auto leaves = leaf_count_for(depth, branching);
  if (!leaves || branching < 2) throw InvalidArgument("invalid tree shape for observation");
  const std::size_t nodes = (*leaves - 1) / static_cast<std::size_t>(branching - 1);
  return nodes * static_cast<std::size_t>(branching);
}

std::vector<double> make_observation(const ReasoningTree& tree, const ObservationSpec& spec,
                                     RandomStream& rng) {
  const std::size_t dim = observation_dim(spec, tree.depth(), tree.branching());
  std::vector<double> obs(dim, 0.0);
  if (spec.mode == ObservationMode::gaussian) {
    for (double& v : obs) v = rng.normal();
    return obs;
  }
  const auto faithful = tree.faithful_path();
  for (std::size_t step = 0; step < faithful.size(); ++step) {
    const std::size_t node = tree.node_index(faithful.first(step));
    obs[node * static_cast<std::size_t>(tree.branching()) + static_cast<std::size_t>(faithful[step])] =
        spec.evidence_strength;
  }
  if (spec.clutter_std > 0.0) {
    for (double& v : obs) v += spec.clutter_std * rng.normal();
  }
  return obs;
}

}  // namespace scs
