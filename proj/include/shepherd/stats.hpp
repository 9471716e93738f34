#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "shepherd/env.hpp"

namespace shepherd::stats {

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0;
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double min = 0;
  double max = 0;
};

namespace detail {

// type-7 quantile: linear interpolation between order statistics
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - lo;
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

// midranks of the pooled sample, in pooled sorted order
inline std::vector<double> midranks(std::vector<double> pooled) {
  std::sort(pooled.begin(), pooled.end());
  std::vector<double> ranks(pooled.size());
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
    const double rank = 0.5 * (i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[k] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

}  // namespace detail

inline SampleSummary summarize(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("summarize: empty sample");
  SampleSummary s;
  s.count = sample.size();
  std::sort(sample.begin(), sample.end());
  double total = 0;
  for (double v : sample) total += v;
  s.mean = total / sample.size();
  s.min = sample.front();
  s.max = sample.back();
  s.q1 = detail::quantile_sorted(sample, 0.25);
  s.median = detail::quantile_sorted(sample, 0.5);
  s.q3 = detail::quantile_sorted(sample, 0.75);
  return s;
}

/// Mann-Whitney U with two-sided p: exact by enumeration over rank
/// assignments when n+m <= 12, normal approximation with tie correction and
/// continuity correction otherwise. Returns (U_x, p).
inline std::pair<double, double> mann_whitney_u(const std::vector<double>& x,
                                                const std::vector<double>& y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  const std::size_t n = x.size(), m = y.size();
  std::vector<double> pooled(x);
  pooled.insert(pooled.end(), y.begin(), y.end());
  std::vector<double> sorted(pooled);
  std::sort(sorted.begin(), sorted.end());
  const std::vector<double> ranks = detail::midranks(pooled);
  auto rank_of = [&](double v) {
    return ranks[std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin()];
  };
  double rank_sum_x = 0;
  for (double v : x) rank_sum_x += rank_of(v);
  const double u_x = rank_sum_x - n * (n + 1) / 2.0;

  double p;
  if (n + m <= 12) {
    // enumerate all C(n+m, n) subsets of pooled positions assigned to x
    const std::size_t total = n + m;
    std::vector<std::size_t> comb(n);
    for (std::size_t i = 0; i < n; ++i) comb[i] = i;
    std::int64_t count = 0, le = 0, ge = 0;
    const double eps = 1e-9;
    bool done = false;
    while (!done) {
      double rs = 0;
      for (std::size_t i : comb) rs += ranks[i];
      const double u = rs - n * (n + 1) / 2.0;
      ++count;
      if (u <= u_x + eps) ++le;
      if (u >= u_x - eps) ++ge;
      // next lexicographic combination
      done = true;
      for (std::size_t i = n; i-- > 0;) {
        if (comb[i] != i + total - n) {
          ++comb[i];
          for (std::size_t j = i + 1; j < n; ++j) comb[j] = comb[j - 1] + 1;
          done = false;
          break;
        }
      }
    }
    p = 2.0 * std::min(static_cast<double>(le), static_cast<double>(ge)) / count;
  } else {
    const double mu = n * m / 2.0;
    std::map<double, std::int64_t> tie_counts;
    for (double v : pooled) ++tie_counts[v];
    double tie_term = 0;
    for (auto& [v, t] : tie_counts) tie_term += static_cast<double>(t) * t * t - t;
    const double total = static_cast<double>(n + m);
    const double var =
        n * m / 12.0 * (total + 1.0 - tie_term / (total * (total - 1.0)));
    if (var <= 0) return {u_x, 1.0};
    const double z = (std::abs(u_x - mu) - 0.5) / std::sqrt(var);
    p = 2.0 * detail::normal_sf(std::max(z, 0.0));
  }
  return {u_x, std::clamp(p, std::numeric_limits<double>::min(), 1.0)};
}

inline double success_rate(const std::vector<EpisodeRecord>& records) {
  if (records.empty()) throw std::invalid_argument("success_rate: empty record list");
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.success ? 1 : 0;
  return static_cast<double>(ok) / records.size();
}

}  // namespace shepherd::stats
