#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "error.hpp"

namespace fowr::stats {

inline double mean(std::span<const double> x) {
  if (x.empty()) throw invalid_parameter("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

/// Unbiased (n - 1) sample variance; 0 for fewer than two values.
inline double variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

/// Upper quantile t_{1 - alpha/2, df} of Student's t.
inline double t_critical(double df, double alpha = 0.05) {
  if (!(df > 0.0)) throw invalid_parameter("t distribution needs df > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw invalid_parameter("alpha must lie in (0, 1)");
  boost::math::students_t dist(df);
  return boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
}

/// Cached t_critical for integer degrees of freedom. Hot loops in the
/// resampling engines evaluate millions of tests with a handful of distinct df.
class critical_table {
 public:
  explicit critical_table(double alpha) : alpha_(alpha) {}

  double operator()(std::size_t df) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(df);
    if (it != cache_.end()) return it->second;
    double v = t_critical(static_cast<double>(df), alpha_);
    cache_.emplace(df, v);
    return v;
  }

  double alpha() const noexcept { return alpha_; }

 private:
  double alpha_;
  mutable std::mutex mutex_;
  mutable std::map<std::size_t, double> cache_;
};

/// Two-sided p-value of a t statistic.
inline double t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw invalid_parameter("t distribution needs df > 0");
  if (std::isinf(t)) return 0.0;
  boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t))));
}

struct interval {
  double mean = 0.0;
  double half_width = 0.0;
  double low() const noexcept { return mean - half_width; }
  double high() const noexcept { return mean + half_width; }
};

/// Student-t confidence interval of the mean. Half-width is 0 for fewer than
/// two values or zero variance.
inline interval t_interval(std::span<const double> x, double level = 0.95) {
  interval out;
  out.mean = mean(x);
  if (x.size() < 2) return out;
  const double var = variance(x);
  if (var <= 0.0) return out;
  const double n = static_cast<double>(x.size());
  out.half_width = t_critical(n - 1.0, 1.0 - level) * std::sqrt(var / n);
  return out;
}

struct one_sample_t {
  double mean = 0.0;
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
  bool degenerate = false;  // zero variance: t undefined
};

/// Two-sided one-sample t-test of H0: E[x] = 0. Zero-variance samples are
/// flagged degenerate; p is 1 for an all-zero sample and 0 otherwise.
inline one_sample_t t_test_zero_mean(std::span<const double> x) {
  if (x.size() < 2) throw invalid_parameter("t-test needs at least two observations");
  one_sample_t out;
  out.mean = mean(x);
  out.df = x.size() - 1;
  const double var = variance(x);
  if (var <= 0.0) {
    out.degenerate = true;
    out.t = out.mean == 0.0 ? 0.0 : std::copysign(INFINITY, out.mean);
    out.p = out.mean == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = out.mean / std::sqrt(var / static_cast<double>(x.size()));
  out.p = t_two_sided_p(out.t, static_cast<double>(out.df));
  return out;
}

/// Nearest-rank percentile (p in [0, 1]) of an ascending-sorted sample.
inline double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw invalid_parameter("percentile of an empty sample");
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

/// Ordinary least-squares slope of y on x; absent when x has no spread.
inline std::optional<double> ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw length_mismatch("regression inputs differ in length");
  if (x.size() < 2) return std::nullopt;
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  return sxy / sxx;
}

}  // namespace fowr::stats
