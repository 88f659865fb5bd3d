#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "scs/errors.hpp"
#include "scs/oracles.hpp"

namespace scs {
namespace {

using oracles::expected_distinct_from_distribution;
using oracles::expected_distinct_options;

// Brute force over all N^M label sequences.
double enumerate_distinct(const std::vector<double>& q, int m) {
  const std::size_t n = q.size();
  std::size_t total = 1;
  for (int i = 0; i < m; ++i) total *= n;
  double expected = 0.0;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    double prob = 1.0;
    std::vector<bool> seen(n, false);
    int distinct = 0;
    for (int i = 0; i < m; ++i) {
      const std::size_t label = rest % n;
      rest /= n;
      prob *= q[label];
      if (!seen[label]) {
        seen[label] = true;
        ++distinct;
      }
    }
    expected += prob * distinct;
  }
  return expected;
}

TEST(ExpectedDistinct, Anchors) {
  EXPECT_NEAR(expected_distinct_options(4, 0.25, 4), 2.734375, 1e-12);
  EXPECT_EQ(expected_distinct_options(4, 1.0, 8), 1.0);
  for (int m : {1, 2, 5}) EXPECT_GE(expected_distinct_options(3, 0.5, m), 1.0);
  EXPECT_NEAR(expected_distinct_options(2, 0.0, 6), 1.0, 1e-15);
  for (int n : {2, 4, 7}) EXPECT_NEAR(expected_distinct_options(n, 0.3, 1), 1.0, 1e-15);
}

TEST(ExpectedDistinct, MatchesBruteForce) {
  for (int n : {2, 3, 4}) {
    for (double p : {0.0, 0.1, 0.5, 0.9, 1.0}) {
      for (int m = 1; m <= 5; ++m) {
        std::vector<double> q(static_cast<std::size_t>(n), (1.0 - p) / (n - 1));
        q[0] = p;
        EXPECT_NEAR(expected_distinct_options(n, p, m), enumerate_distinct(q, m), 1e-12);
        EXPECT_NEAR(expected_distinct_from_distribution(q, m), enumerate_distinct(q, m), 1e-12);
      }
    }
  }
  const std::vector<double> skew = {0.6, 0.25, 0.1, 0.05};
  for (int m = 1; m <= 5; ++m) EXPECT_NEAR(expected_distinct_from_distribution(skew, m), enumerate_distinct(skew, m), 1e-12);
}

TEST(ExpectedDistinct, BoundsAndMonotoneInTrials) {
  for (int n : {2, 4, 6}) {
    for (double p = 0.0; p <= 1.0; p += 0.05) {
      double previous = 0.0;
      for (int m = 1; m <= 16; ++m) {
        const double e = expected_distinct_options(n, p, m);
        EXPECT_GE(e, 1.0 - 1e-12);
        EXPECT_LE(e, std::min(n, m) + 1e-12);
        EXPECT_GE(e, previous - 1e-12);
        previous = e;
      }
    }
  }
}

TEST(ExpectedDistinct, RejectsBadArguments) {
  EXPECT_THROW(expected_distinct_options(1, 0.5, 2), InvalidArgument);
  EXPECT_THROW(expected_distinct_options(4, 1.5, 2), InvalidArgument);
  EXPECT_THROW(expected_distinct_options(4, 0.5, 0), InvalidArgument);
  EXPECT_THROW(expected_distinct_from_distribution(std::vector<double>{0.5, 0.2}, 2), InvalidArgument);
}

TEST(MonteCarlo, AgreesWithClosedForm) {
  RandomStream rng(9);
  for (int n : {2, 4}) {
    for (double p : {0.0, 0.3, 1.0}) {
      for (int m : {1, 3, 8}) {
        const auto est = oracles::monte_carlo_distinct_options(n, p, m, 20000, rng);
        const double closed = expected_distinct_options(n, p, m);
        EXPECT_LE(std::abs(est.mean - closed), 4.0 * est.standard_error + 1e-12);
      }
    }
  }
}

TEST(MonteCarlo, DetectsWrongReference) {
  RandomStream rng(10);
  const auto est = oracles::monte_carlo_distinct_options(4, 0.25, 4, 100000, rng);
  EXPECT_GT(std::abs(est.mean - (expected_distinct_options(4, 0.25, 4) + 0.05)), 3.0 * est.standard_error);
}

TEST(PathProbabilities, SumToOneAndMatchTrajectoryProbability) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TreeTask task = testing::random_task(seed, 3, 3, 4);
    const Policy policy = testing::random_policy(task, seed);
    const auto paths = enumerate_trajectories(task.tree);
    const auto probs = oracles::path_probabilities(policy, task, paths);
    EXPECT_NEAR(std::accumulate(probs.begin(), probs.end(), 0.0), 1.0, 1e-12);
    for (std::size_t i = 0; i < paths.size(); i += 5) {
      EXPECT_NEAR(probs[i], trajectory_probability(task.tree, policy, task.observation, paths[i]), 1e-14);
    }
  }
}

TEST(ContinuationDistribution, EmptyPrefixIsMarginalAndLeafPrefixRejected) {
  const TreeTask task = testing::random_task(6, 3, 2, 3);
  const Policy policy = testing::random_policy(task, 6);
  const auto paths = enumerate_trajectories(task.tree);
  const auto probs = oracles::path_probabilities(policy, task, paths);
  std::vector<double> marginal(3, 0.0);
  for (std::size_t i = 0; i < paths.size(); ++i) marginal[static_cast<std::size_t>(task.tree.option_at(paths[i]))] += probs[i];
  const auto q = oracles::continuation_option_distribution(policy, task, {}, task.observation);
  for (std::size_t o = 0; o < 3; ++o) EXPECT_NEAR(q[o], marginal[o], 1e-12);

  EXPECT_THROW(oracles::continuation_option_distribution(policy, task, paths[3], task.observation), InvalidArgument);
}

TEST(ExactExpectedReward, AccuracyOnlyEqualsCorrectProbability) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TreeTask task = testing::random_task(seed, 3, 3, 4);
    const Policy policy = testing::random_policy(task, seed);
    RewardConfig rewards;
    EXPECT_NEAR(oracles::exact_expected_reward(policy, task, rewards, std::nullopt),
                correct_option_probability(policy, task), 1e-12);
    rewards.format_weight = 0.5;
    EXPECT_NEAR(oracles::exact_expected_reward(policy, task, rewards, std::nullopt),
                correct_option_probability(policy, task) + 0.5, 1e-12);
  }
}

TEST(ExactExpectedReward, MatchesSampledRewardWithConsistency) {
  const TreeTask task = testing::random_task(2, 3, 3, 4);
  const Policy policy = testing::random_policy(task, 2);
  RewardConfig rewards;
  rewards.normalize_consistency = false;
  SamplerConfig sampler;
  sampler.sigma_max = 0.0;
  const double exact = oracles::exact_expected_reward(policy, task, rewards, sampler);
  RandomStream rng(4);
  constexpr int kSamples = 40000;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const Trajectory t = sample_trajectory(policy, task, rng);
    const AnswerSet a = collect_answers(policy, task, t, sampler, rng.substream({static_cast<std::uint64_t>(i)}));
    const double r = compose(task, t, &a, sampler.n_resamples, rewards).total;
    sum += r;
    sum_sq += r * r;
  }
  const double mean = sum / kSamples;
  const double se = std::sqrt((sum_sq / kSamples - mean * mean) / (kSamples - 1));
  EXPECT_NEAR(mean, exact, 3.5 * se);
}

TEST(ExactPolicyGradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const TreeTask task = testing::random_task(seed, 3, 2 + static_cast<int>(seed % 2), 3, 2);
    const Policy policy = testing::random_policy(task, seed);
    RewardConfig rewards;
    rewards.format_weight = 0.2;
    const auto grad = oracles::exact_policy_gradient(policy, task, rewards);
    const auto coords = testing::all_coordinates(policy);
    const auto fd = testing::central_differences(
        policy, [&](const Policy& p) { return oracles::exact_expected_reward(p, task, rewards, std::nullopt); }, coords);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      EXPECT_LT(testing::relative_error(grad.values()[coords[i]], fd[i]), 1e-4) << "coordinate " << coords[i];
    }
  }
}

TEST(ExactOracles, RefuseLargeTrees) {
  const TreeTask task = testing::random_task(1, 6, 5, 4);
  const Policy policy = testing::uniform_policy(task);
  EXPECT_THROW(oracles::exact_expected_reward(policy, task, RewardConfig{}, std::nullopt), EnumerationInfeasible);
  EXPECT_THROW(oracles::exact_policy_gradient(policy, task, RewardConfig{}), EnumerationInfeasible);
}

}  // namespace
}  // namespace scs
