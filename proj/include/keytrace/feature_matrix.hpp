#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "keylog.hpp"
#include "stats.hpp"

namespace keytrace {

enum class Condition { Unaware, LowOnly, HighOnly };

inline std::string_view condition_name(Condition c) {
  switch (c) {
    case Condition::Unaware: return "unaware";
    case Condition::LowOnly: return "low";
    case Condition::HighOnly: return "high";
  }
  return "?";
}

inline Condition parse_condition(std::string_view s) {
  if (s == "unaware") return Condition::Unaware;
  if (s == "low") return Condition::LowOnly;
  if (s == "high") return Condition::HighOnly;
  throw Error("unknown condition '" + std::string(s) + "' (expected unaware|low|high)");
}

inline bool condition_includes(Condition c, const TaskId& task) {
  switch (c) {
    case Condition::Unaware: return true;
    case Condition::LowOnly: return task_cognition(task).level == CognitiveLevel::Low;
    case Condition::HighOnly: return task_cognition(task).level == CognitiveLevel::High;
  }
  return false;
}

struct RowKey {
  std::string user_id;
  Condition scope = Condition::Unaware;
  Scenario label = Scenario::BonaFide;

  friend bool operator==(const RowKey&, const RowKey&) = default;
};

struct FeatureMatrix {
  std::vector<std::string> column_names;
  std::vector<std::vector<double>> rows;
  std::vector<RowKey> row_keys;

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return column_names.size(); }

  std::vector<int> labels() const {
    std::vector<int> y;
    y.reserve(row_keys.size());
    for (const auto& k : row_keys) y.push_back(class_index(k.label));
    return y;
  }

  std::vector<double> column(std::size_t j) const {
    std::vector<double> c;
    c.reserve(rows.size());
    for (const auto& r : rows) c.push_back(r[j]);
    return c;
  }

  bool has_missing() const {
    for (const auto& r : rows) {
      if (std::any_of(r.begin(), r.end(), [](double v) { return is_missing(v); })) return true;
    }
    return false;
  }

  // Keeps only the named columns, in the given order.
  FeatureMatrix select(std::span<const std::string> names) const {
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) {
      auto it = std::find(column_names.begin(), column_names.end(), n);
      if (it == column_names.end()) throw Error("unknown feature column '" + n + "'");
      idx.push_back(static_cast<std::size_t>(it - column_names.begin()));
    }
    FeatureMatrix out;
    out.column_names.assign(names.begin(), names.end());
    out.row_keys = row_keys;
    out.rows.reserve(rows.size());
    for (const auto& r : rows) {
      std::vector<double> nr;
      nr.reserve(idx.size());
      for (auto j : idx) nr.push_back(r[j]);
      out.rows.push_back(std::move(nr));
    }
    return out;
  }

  friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.column_names != b.column_names || a.row_keys != b.row_keys) return false;
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const auto& x = a.rows[i];
      const auto& y = b.rows[i];
      if (x.size() != y.size()) return false;
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] == y[j] || (is_missing(x[j]) && is_missing(y[j])))) return false;
      }
    }
    return true;
  }
};

/// Per-column outlier clipping and median imputation, fitted on training
/// rows and applied unchanged to any other rows.
class ColumnConditioner {
 public:
  struct Options {
    bool clip = true;
    double lower_percentile = 0.005;
    double upper_percentile = 0.995;
  };

  ColumnConditioner() = default;

  static ColumnConditioner fit(const FeatureMatrix& train, Options opts) {
    ColumnConditioner c;
    c.opts_ = opts;
    const auto d = train.column_count();
    c.lower_.assign(d, -std::numeric_limits<double>::infinity());
    c.upper_.assign(d, std::numeric_limits<double>::infinity());
    c.median_.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> present;
      for (const auto& r : train.rows) {
        if (!is_missing(r[j])) present.push_back(r[j]);
      }
      if (present.empty()) continue;
      std::sort(present.begin(), present.end());
      if (opts.clip) {
        c.lower_[j] = stats::quantile_sorted(present, opts.lower_percentile);
        c.upper_[j] = stats::quantile_sorted(present, opts.upper_percentile);
        for (auto& v : present) v = std::clamp(v, c.lower_[j], c.upper_[j]);
      }
      c.median_[j] = stats::quantile_sorted(present, 0.5);
    }
    return c;
  }

  static ColumnConditioner fit(const FeatureMatrix& train) { return fit(train, Options{}); }

  FeatureMatrix transform(FeatureMatrix m) const {
    if (m.column_count() != median_.size()) throw Error("conditioner width mismatch");
    for (auto& r : m.rows) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        r[j] = is_missing(r[j]) ? median_[j] : std::clamp(r[j], lower_[j], upper_[j]);
      }
    }
    return m;
  }

  const std::vector<double>& lower_bounds() const { return lower_; }
  const std::vector<double>& upper_bounds() const { return upper_; }
  const std::vector<double>& medians() const { return median_; }

 private:
  Options opts_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> median_;
};

inline std::string format_number(double v) {
  if (is_missing(v)) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Header: user,scope,label,<columns>. Missing cells are written empty.
inline void write_csv(const FeatureMatrix& m, std::ostream& out) {
  out << "user,scope,label";
  for (const auto& n : m.column_names) out << ',' << csv_field(n);
  out << '\n';
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    const auto& k = m.row_keys[i];
    out << csv_field(k.user_id) << ',' << condition_name(k.scope) << ',' << scenario_name(k.label);
    for (double v : m.rows[i]) out << ',' << format_number(v);
    out << '\n';
  }
}

}  // namespace keytrace
