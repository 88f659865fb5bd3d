#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace scs {

class Policy;

using ActionPath = std::vector<int>;

inline constexpr std::size_t kDefaultEnumerationCap = 4096;

/// A perfect B-ary reasoning tree of depth D whose leaves are labelled with
/// multiple-choice options. Exactly one root-to-leaf path is faithful and it
/// ends on the correct option.
///
/// Decision nodes are numbered breadth-first: the root is 0 and the child of
/// node n under action a is n * B + a + 1. Leaves are numbered by reading the
/// action path as a base-B integer.
class ReasoningTree {
 public:
  /// Validates every structural invariant and throws InvalidArgument on
  /// violation.
  ReasoningTree(int depth, int branching, int n_options, std::vector<int> leaf_option_map,
                ActionPath faithful_path, std::uint64_t seed = 0);

  int depth() const noexcept { return depth_; }
  int branching() const noexcept { return branching_; }
  int n_options() const noexcept { return n_options_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::size_t leaf_count() const noexcept { return leaf_option_map_.size(); }
  /// Number of decision (internal) nodes.
  std::size_t node_count() const noexcept { return node_count_; }

  std::span<const int> leaf_option_map() const noexcept { return leaf_option_map_; }
  std::span<const int> faithful_path() const noexcept { return faithful_path_; }
  int correct_option() const noexcept { return correct_option_; }

  /// Decision node reached after `prefix`; requires prefix.size() < depth.
  std::size_t node_index(std::span<const int> prefix) const;
  std::size_t leaf_index(std::span<const int> path) const;
  int option_at(std::span<const int> path) const;

  bool is_valid_prefix(std::span<const int> actions) const noexcept;
  bool is_complete_path(std::span<const int> actions) const noexcept;
  bool is_faithful(std::span<const int> actions) const noexcept;

  friend bool operator==(const ReasoningTree&, const ReasoningTree&) = default;

 private:
  int depth_;
  int branching_;
  int n_options_;
  std::uint64_t seed_;
  std::size_t node_count_;
  std::vector<int> leaf_option_map_;
  ActionPath faithful_path_;
  int correct_option_;
};

/// One problem instance: a tree plus the observation the policy conditions on.
struct TreeTask {
  ReasoningTree tree;
  std::vector<double> observation;
  int correct_option;
  std::string task_id;
};

/// Builds a task, setting correct_option from the tree and checking that the
/// observation is finite.
TreeTask make_task(ReasoningTree tree, std::vector<double> observation, std::string task_id);

struct Trajectory {
  ActionPath actions;
  std::vector<double> step_logprobs;
  std::optional<int> terminal_option;
  bool is_faithful = false;
  bool is_complete = false;

  double log_prob() const noexcept;
};

/// Wraps an action sequence, deriving completeness, terminal option and
/// faithfulness from the tree. Throws if `actions` is not a valid prefix.
Trajectory make_trajectory(const ReasoningTree& tree, ActionPath actions,
                           std::vector<double> step_logprobs = {});

/// Seeded tree generator. The faithful path and correct option are drawn
/// uniformly; every other leaf gets a uniform option, followed by a repair
/// pass that guarantees every option labels at least one leaf.
ReasoningTree generate_tree(std::uint64_t seed, int depth, int branching, int n_options);

/// Throws EnumerationInfeasible when a tree of this shape has more than `cap`
/// root-to-leaf paths.
void require_enumerable(int depth, int branching, std::size_t cap = kDefaultEnumerationCap);

/// All root-to-leaf paths in lexicographic order. Throws EnumerationInfeasible
/// when B^D exceeds `cap`.
std::vector<ActionPath> enumerate_trajectories(const ReasoningTree& tree,
                                               std::size_t cap = kDefaultEnumerationCap);

/// Product of per-step softmax probabilities of `actions` under `policy`.
double trajectory_probability(const ReasoningTree& tree, const Policy& policy,
                              std::span<const double> observation, std::span<const int> actions);

/// B^D, or nullopt when it overflows 64 bits.
std::optional<std::size_t> leaf_count_for(int depth, int branching) noexcept;

}  // namespace scs

namespace scs {

class RandomStream;

enum class ObservationMode {
  /// One channel per (decision node, action); the faithful path's channels
  /// carry `evidence_strength`, all channels get Gaussian clutter.
  evidence,
  /// `dim` i.i.d. standard normal features with no relation to the tree.
  gaussian,
};

struct ObservationSpec {
  ObservationMode mode = ObservationMode::evidence;
  std::size_t dim = 8;
  double evidence_strength = 1.0;
  double clutter_std = 0.1;
};

std::size_t observation_dim(const ObservationSpec& spec, int depth, int branching);

std::vector<double> make_observation(const ReasoningTree& tree, const ObservationSpec& spec,
                                     RandomStream& rng);

}  // namespace scs
