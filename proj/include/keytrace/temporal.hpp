#pragma once

// Key hold time (KHT) and key interval time (KIT) features.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "feature_matrix.hpp"
#include "keylog.hpp"
#include "samples.hpp"
#include "stats.hpp"

namespace keytrace {

struct KHTSample {
  std::string key_value;
  double duration_ms;

  friend bool operator==(const KHTSample&, const KHTSample&) = default;
};

struct KITSample {
  std::pair<std::string, std::string> key_pair;
  double interval_ms;

  friend bool operator==(const KITSample&, const KITSample&) = default;
};

inline bool is_navigation_or_backspace(const KeyEvent& ev) {
  return ev.key_value == "Backspace" || ev.key_value.starts_with("Arrow") ||
         ev.key_code == "Backspace" || ev.key_code.starts_with("Arrow");
}

// Holds at or below this on Backspace/Arrow keys are repeat artifacts.
inline constexpr double kMinPlausibleHoldMs = 2.0;

/// One sample per Down/Up pair, in Down order.
inline std::vector<KHTSample> extract_kht(const KeystrokeLog& log) {
  std::map<std::string, std::size_t> open;  // key_code -> event index of Down
  std::vector<std::pair<std::size_t, KHTSample>> found;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const auto& ev = log.events[i];
    if (ev.is_down()) {
      open[ev.key_code] = i;
      continue;
    }
    auto it = open.find(ev.key_code);
    if (it == open.end()) continue;
    const auto& down = log.events[it->second];
    const double d = static_cast<double>(ev.timestamp_ms - down.timestamp_ms);
    if (!(is_navigation_or_backspace(down) && d <= kMinPlausibleHoldMs)) {
      found.push_back({it->second, {down.key_value, d}});
    }
    open.erase(it);
  }
  std::sort(found.begin(), found.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<KHTSample> out;
  out.reserve(found.size());
  for (auto& [i, s] : found) out.push_back(std::move(s));
  return out;
}

/// Down-to-Down intervals between adjacent keystrokes of one question.
inline std::vector<KITSample> extract_kit(const KeystrokeLog& log) {
  std::vector<KITSample> out;
  const KeyEvent* prev = nullptr;
  for (const auto& ev : log.events) {
    if (!ev.is_down()) continue;
    if (prev != nullptr) {
      out.push_back({{prev->key_value, ev.key_value},
                     static_cast<double>(ev.timestamp_ms - prev->timestamp_ms)});
    }
    prev = &ev;
  }
  return out;
}

// Intervals never span two logs.
inline std::vector<KITSample> extract_kit(std::span<const KeystrokeLog* const> logs) {
  std::vector<KITSample> out;
  for (const auto* log : logs) {
    auto part = extract_kit(*log);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

inline std::string kht_feature_name(const std::string& key) { return "kht[" + key + "]"; }

inline std::string kit_feature_name(const std::pair<std::string, std::string>& pair) {
  return "kit[" + pair.first + "→" + pair.second + "]";
}

inline constexpr std::array<std::string_view, 5> kSummary5Names{"q1", "median", "q3", "mean",
                                                                 "std"};

// Feature name -> raw values for one sample.
using TemporalValues = std::map<std::string, std::vector<double>>;

inline TemporalValues temporal_values(std::span<const KeystrokeLog* const> logs) {
  TemporalValues values;
  for (const auto* log : logs) {
    for (auto& s : extract_kht(*log)) values[kht_feature_name(s.key_value)].push_back(s.duration_ms);
    for (auto& s : extract_kit(*log)) values[kit_feature_name(s.key_pair)].push_back(s.interval_ms);
  }
  return values;
}

/// Names observed for at least `coverage_threshold` of the users, sorted.
/// Throws when nothing qualifies.
inline std::vector<std::string> select_common_features(
    const std::map<std::string, std::set<std::string>>& names_by_user, double coverage_threshold) {
  std::map<std::string, std::size_t> users_with;
  for (const auto& [user, names] : names_by_user) {
    for (const auto& n : names) ++users_with[n];
  }
  const double n_users = static_cast<double>(names_by_user.size());
  std::vector<std::string> out;
  for (const auto& [name, count] : users_with) {
    if (static_cast<double>(count) + 1e-9 >= coverage_threshold * n_users) out.push_back(name);
  }
  if (out.empty()) {
    throw Error("no common features at threshold " + std::to_string(coverage_threshold));
  }
  return out;
}

inline std::vector<std::string> temporal_column_names(std::span<const std::string> features) {
  std::vector<std::string> cols;
  cols.reserve(features.size() * kSummary5Names.size());
  for (const auto& f : features) {
    for (auto s : kSummary5Names) cols.push_back(f + "_" + std::string(s));
  }
  return cols;
}

struct TemporalOptions {
  double coverage_threshold = 0.9;
  ColumnConditioner::Options conditioning{};
};

/// Unconditioned matrix: 5 statistics per feature, missing where a sample
/// never produced the key or pair.
inline FeatureMatrix raw_temporal_matrix(std::span<const Sample> samples,
                                         std::span<const std::string> features) {
  FeatureMatrix m;
  m.column_names = temporal_column_names(features);
  for (const auto& s : samples) {
    const auto values = temporal_values(s.logs);
    std::vector<double> row;
    row.reserve(m.column_names.size());
    for (const auto& f : features) {
      auto it = values.find(f);
      const auto summary =
          it == values.end() ? stats::Summary5{} : stats::summarize5(it->second);
      for (double v : summary.as_array()) row.push_back(v);
    }
    m.rows.push_back(std::move(row));
    m.row_keys.push_back(s.key);
  }
  return m;
}

inline std::map<std::string, std::set<std::string>> temporal_names_by_user(
    std::span<const Sample> samples) {
  std::map<std::string, std::set<std::string>> by_user;
  for (const auto& s : samples) {
    auto& names = by_user[s.key.user_id];
    for (const auto& [name, v] : temporal_values(s.logs)) names.insert(name);
  }
  return by_user;
}

struct FittedMatrices {
  FeatureMatrix train;
  FeatureMatrix test;
  ColumnConditioner conditioner;
};

/// Chooses the common features, clip bounds and imputation medians from
/// `train` only, then applies them to both sample sets.
inline FittedMatrices build_temporal_matrices(std::span<const Sample> train,
                                              std::span<const Sample> test,
                                              const TemporalOptions& opts = {}) {
  const auto features =
      select_common_features(temporal_names_by_user(train), opts.coverage_threshold);
  auto raw_train = raw_temporal_matrix(train, features);
  auto raw_test = raw_temporal_matrix(test, features);
  auto conditioner = ColumnConditioner::fit(raw_train, opts.conditioning);
  return {conditioner.transform(std::move(raw_train)), conditioner.transform(std::move(raw_test)),
          std::move(conditioner)};
}

/// Whole-corpus matrix for one condition, fitted on all of its rows.
inline FeatureMatrix build_temporal_matrix(const Corpus& corpus, Condition scope,
                                           const TemporalOptions& opts = {}) {
  const auto set = build_samples(corpus, scope);
  return build_temporal_matrices(set.samples, {}, opts).train;
}

/// Same, with a caller-chosen feature list.
inline FeatureMatrix build_temporal_matrix(const Corpus& corpus, Condition scope,
                                           std::span<const std::string> features,
                                           const TemporalOptions& opts = {}) {
  const auto set = build_samples(corpus, scope);
  auto raw = raw_temporal_matrix(set.samples, features);
  return ColumnConditioner::fit(raw, opts.conditioning).transform(std::move(raw));
}

}  // namespace keytrace
