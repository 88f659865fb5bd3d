#pragma once

#include <span>

namespace scs::stats {

double mean(std::span<const double> xs);
/// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> xs);
double median(std::span<const double> xs);

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;
  double lower() const noexcept { return mean - half_width; }
  double upper() const noexcept { return mean + half_width; }
};

/// Two-sided Student-t interval for the mean at the given confidence level.
ConfidenceInterval t_interval(std::span<const double> xs, double confidence);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// One-sided Welch test of H1: mean(a) > mean(b).
TestResult welch_greater(std::span<const double> a, std::span<const double> b);

/// One-sided paired t-test of H1: mean(a - b) > 0.
TestResult paired_greater(std::span<const double> a, std::span<const double> b);

}  // namespace scs::stats
