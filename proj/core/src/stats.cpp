#include "scs/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "scs/errors.hpp"

namespace scs::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw InvalidArgument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw InvalidArgument("median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

ConfidenceInterval t_interval(std::span<const double> xs, double confidence) {
  if (xs.size() < 2) throw InvalidArgument("a t interval needs at least two values");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
  ConfidenceInterval ci;
  ci.mean = mean(xs);
  const double sd = sample_std(xs);
  const double n = static_cast<double>(xs.size());
  const boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 + confidence / 2.0);
  ci.half_width = t * sd / std::sqrt(n);
  return ci;
}

TestResult welch_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InvalidArgument("welch test needs two values per sample");
  const double va = std::pow(sample_std(a), 2) / static_cast<double>(a.size());
  const double vb = std::pow(sample_std(b), 2) / static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  TestResult r;
  if (va + vb == 0.0) {
    r.statistic = diff > 0 ? INFINITY : (diff < 0 ? -INFINITY : 0.0);
    r.p_value = diff > 0 ? 0.0 : 1.0;
    return r;
  }
  r.statistic = diff / std::sqrt(va + vb);
  const double dof = std::pow(va + vb, 2) /
                     (va * va / static_cast<double>(a.size() - 1) +
                      vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

TestResult paired_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw InvalidArgument("paired test needs equal-length samples of at least two values");
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double m = mean(d);
  const double se = sample_std(d) / std::sqrt(static_cast<double>(d.size()));
  TestResult r;
  if (se == 0.0) {
    r.statistic = m > 0 ? INFINITY : (m < 0 ? -INFINITY : 0.0);
    r.p_value = m > 0 ? 0.0 : 1.0;
    return r;
  }
  r.statistic = m / se;
  const boost::math::students_t dist(static_cast<double>(d.size() - 1));
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

}  // namespace scs::stats
