#pragma once

#include "scs/scs_sampler.hpp"
#include "scs/tree_env.hpp"

namespace scs {

struct RewardConfig {
  double accuracy_weight = 1.0;
  double format_weight = 0.0;
  double consistency_weight = 0.5;
  /// c * (m - |A|) / m when true, c * (m - |A|) otherwise.
  bool normalize_consistency = true;

  void validate() const;
};

/// r_acc and r_for are the raw 0/1 verifier outputs; r_con already includes
/// its weight. total = w_acc * r_acc + w_for * r_for + r_con.
struct RewardBreakdown {
  double r_acc = 0.0;
  double r_for = 0.0;
  double r_con = 0.0;
  double total = 0.0;
};

/// 1 when the trajectory's final option is the task's correct option.
double verify(const TreeTask& task, const Trajectory& trajectory);

/// 1 when the trajectory reached a leaf.
double format_reward(const Trajectory& trajectory) noexcept;

double consistency_reward(int distinct_count, int n_resamples, double weight, bool normalize);
double consistency_reward(const AnswerSet& answers, int n_resamples, double weight, bool normalize);

/// Composes the shaped reward. Pass answers == nullptr when self-consistency
/// sampling is off; r_con is then 0.
RewardBreakdown compose(const TreeTask& task, const Trajectory& trajectory, const AnswerSet* answers,
                        int n_resamples, const RewardConfig& config);

}  // namespace scs
