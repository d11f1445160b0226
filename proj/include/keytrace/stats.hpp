#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <vector>

namespace keytrace {

// Missing cells are NaN until a fitted conditioner imputes them.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

namespace stats {

// Linear interpolation between order statistics (position q*(n-1)).
// `sorted` must be ascending and non-empty.
inline double quantile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double quantile(std::span<const double> values, double q) {
  if (values.empty()) return kMissing;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, q);
}

inline double sum(std::span<const double> values) {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

inline double mean(std::span<const double> values) {
  if (values.empty()) return kMissing;
  return sum(values) / static_cast<double>(values.size());
}

// Population form: divides by n, so a single value has std 0.
inline double stddev(std::span<const double> values) {
  if (values.empty()) return kMissing;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

inline double median(std::span<const double> values) { return quantile(values, 0.5); }

/// (Q1, median, Q3, mean, std). Empty input gives five missing markers.
struct Summary5 {
  double q1 = kMissing;
  double median = kMissing;
  double q3 = kMissing;
  double mean = kMissing;
  double std = kMissing;

  std::array<double, 5> as_array() const { return {q1, median, q3, mean, std}; }
};

inline Summary5 summarize5(std::span<const double> values) {
  if (values.empty()) return {};
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return {quantile_sorted(v, 0.25), quantile_sorted(v, 0.5), quantile_sorted(v, 0.75), mean(v),
          stddev(v)};
}

/// (mean, std, total, count, median, Q1, Q3). Empty input has total = count = 0
/// and missing markers in the remaining slots.
struct Summary7 {
  double mean = kMissing;
  double std = kMissing;
  double total = 0.0;
  double count = 0.0;
  double median = kMissing;
  double q1 = kMissing;
  double q3 = kMissing;

  std::array<double, 7> as_array() const { return {mean, std, total, count, median, q1, q3}; }
};

inline Summary7 summarize7(std::span<const double> values) {
  Summary7 s;
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  s.total = sum(values);
  s.count = static_cast<double>(values.size());
  s.mean = s.total / s.count;
  s.std = stddev(values);
  s.median = quantile_sorted(v, 0.5);
  s.q1 = quantile_sorted(v, 0.25);
  s.q3 = quantile_sorted(v, 0.75);
  return s;
}

// Shannon entropy in bits of a histogram; empty bins are skipped.
template <typename Count>
double entropy_bits(std::span<const Count> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c <= 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

inline double entropy_bits(const std::map<long long, std::size_t>& histogram) {
  std::vector<std::size_t> counts;
  counts.reserve(histogram.size());
  for (const auto& [bin, c] : histogram) counts.push_back(c);
  return entropy_bits<std::size_t>(counts);
}

}  // namespace stats
}  // namespace keytrace
