#include "scs/rewards.hpp"

#include <cmath>

#include "scs/errors.hpp"

namespace scs {
namespace {

bool non_negative_finite(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void RewardConfig::validate() const {
  if (!non_negative_finite(accuracy_weight) || !non_negative_finite(format_weight) ||
      !non_negative_finite(consistency_weight)) {
    throw InvalidArgument("reward weights must be finite and non-negative");
  }
}

double verify(const TreeTask& task, const Trajectory& trajectory) {
  if (!trajectory.is_complete || !trajectory.terminal_option) {
    throw InvalidArgument("cannot verify an incomplete trajectory");
  }
  return *trajectory.terminal_option == task.correct_option ? 1.0 : 0.0;
}

double format_reward(const Trajectory& trajectory) noexcept {
  return trajectory.is_complete ? 1.0 : 0.0;
}

double consistency_reward(int distinct_count, int n_resamples, double weight, bool normalize) {
  if (n_resamples < 1) throw InvalidArgument("n_resamples must be >= 1");
  if (distinct_count < 1 || distinct_count > n_resamples) {
    throw InvalidArgument("distinct answer count must lie in [1, m]");
  }
  const double spread = static_cast<double>(n_resamples - distinct_count);
  return normalize ? weight * spread / static_cast<double>(n_resamples) : weight * spread;
}

double consistency_reward(const AnswerSet& answers, int n_resamples, double weight, bool normalize) {
  return consistency_reward(answers.distinct_count, n_resamples, weight, normalize);
}

RewardBreakdown compose(const TreeTask& task, const Trajectory& trajectory, const AnswerSet* answers,
                        int n_resamples, const RewardConfig& config) {
  RewardBreakdown r;
  r.r_acc = verify(task, trajectory);
  r.r_for = format_reward(trajectory);
  if (answers != nullptr) {
    r.r_con = consistency_reward(*answers, n_resamples, config.consistency_weight,
                                 config.normalize_consistency);
  }
  r.total = config.accuracy_weight * r.r_acc + config.format_weight * r.r_for + r.r_con;
  return r;
}

}  // namespace scs
