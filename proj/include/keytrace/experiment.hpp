#pragma once

// User-disjoint split plans, cognition regimes, dataset materialization and
// mutual-information feature selection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "feature_matrix.hpp"
#include "keylog.hpp"
#include "rhythmic.hpp"
#include "rng.hpp"
#include "samples.hpp"
#include "temporal.hpp"

namespace keytrace {

inline constexpr int kMinTrainPercent = 30;
inline constexpr int kMaxTrainPercent = 70;
inline constexpr int kPercentStep = 2;
inline constexpr int kTrialsPerFraction = 5;
inline constexpr int kFractionCount = (kMaxTrainPercent - kMinTrainPercent) / kPercentStep + 1;
inline constexpr int kSplitCount = kFractionCount * kTrialsPerFraction;

struct SplitPlan {
  int id = 0;             // 0..104
  int train_percent = 0;  // 30, 32, ..., 70
  int trial = 1;          // 1..5
  std::uint64_t seed = 0;
  std::set<std::string> train_users;
  std::set<std::string> test_users;

  double train_fraction() const { return train_percent / 100.0; }
  bool is_standard_70_30() const { return train_percent == kMaxTrainPercent; }
};

// round-half-up of percent * n / 100
inline std::size_t train_size(int percent, std::size_t n_users) {
  return (static_cast<std::size_t>(percent) * n_users + 50) / 100;
}

/// 21 training fractions x 5 trials. Plans depend only on the user set and
/// the seed, so every regime reuses the same partitions.
inline std::vector<SplitPlan> generate_splits(const std::set<std::string>& users,
                                              std::uint64_t seed) {
  if (users.size() < 10) {
    throw Error("at least 10 users are required for split generation (got " +
                std::to_string(users.size()) + ")");
  }
  std::vector<SplitPlan> plans;
  plans.reserve(kSplitCount);
  int id = 0;
  for (int pct = kMinTrainPercent; pct <= kMaxTrainPercent; pct += kPercentStep) {
    for (int trial = 1; trial <= kTrialsPerFraction; ++trial, ++id) {
      SplitPlan p;
      p.id = id;
      p.train_percent = pct;
      p.trial = trial;
      p.seed = mix_seed(seed, static_cast<std::uint64_t>(pct * 100 + trial));
      std::vector<std::string> order(users.begin(), users.end());
      Rng rng(p.seed);
      rng.shuffle(std::span<std::string>(order));
      const auto n_train = train_size(pct, order.size());
      p.train_users.insert(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
      p.test_users.insert(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
      plans.push_back(std::move(p));
    }
  }
  return plans;
}

enum class Regime { Unaware, HH, HL, LH, LL };

struct RegimePair {
  Condition train_condition;
  Condition test_condition;
};

inline RegimePair regime_conditions(Regime r) {
  switch (r) {
    case Regime::Unaware: return {Condition::Unaware, Condition::Unaware};
    case Regime::HH: return {Condition::HighOnly, Condition::HighOnly};
    case Regime::HL: return {Condition::HighOnly, Condition::LowOnly};
    case Regime::LH: return {Condition::LowOnly, Condition::HighOnly};
    case Regime::LL: return {Condition::LowOnly, Condition::LowOnly};
  }
  return {Condition::Unaware, Condition::Unaware};
}

inline std::string_view regime_name(Regime r) {
  switch (r) {
    case Regime::Unaware: return "unaware";
    case Regime::HH: return "hh";
    case Regime::HL: return "hl";
    case Regime::LH: return "lh";
    case Regime::LL: return "ll";
  }
  return "?";
}

inline Regime parse_regime(std::string_view s) {
  for (auto r : {Regime::Unaware, Regime::HH, Regime::HL, Regime::LH, Regime::LL}) {
    if (s == regime_name(r)) return r;
  }
  throw Error("unknown regime '" + std::string(s) + "' (expected unaware|hh|hl|lh|ll)");
}

inline bool is_cross_cognition(Regime r) { return r == Regime::HL || r == Regime::LH; }

enum class FeatureFamily { Temporal, Rhythmic };

inline std::string_view family_name(FeatureFamily f) {
  return f == FeatureFamily::Temporal ? "temporal" : "rhythmic";
}

inline FeatureFamily parse_family(std::string_view s) {
  if (s == "temporal") return FeatureFamily::Temporal;
  if (s == "rhythmic") return FeatureFamily::Rhythmic;
  throw Error("unknown feature family '" + std::string(s) + "' (expected temporal|rhythmic)");
}

// ---------------------------------------------------------------------------
// Mutual information

/// Equal-frequency bin index for every value: cut points sit at the values of
/// rank floor(k*n/bins), k = 1..bins-1, and tied values always share a bin.
inline std::vector<int> equal_frequency_bins(std::span<const double> values, int bins) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  std::vector<double> cuts;
  for (int k = 1; k < bins; ++k) {
    cuts.push_back(sorted[static_cast<std::size_t>(k) * n / static_cast<std::size_t>(bins)]);
  }
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) {
    out.push_back(static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin()));
  }
  return out;
}

/// Plug-in mutual information (bits) between a discretized feature and the
/// class labels.
inline double mutual_information(std::span<const double> feature, std::span<const int> labels,
                                 int bins = 8) {
  if (feature.size() != labels.size()) throw Error("feature/label length mismatch");
  if (feature.empty()) return 0.0;
  const auto x = equal_frequency_bins(feature, bins);
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px;
  std::map<int, double> py;
  const double n = static_cast<double>(feature.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    joint[{x[i], labels[i]}] += 1.0;
    px[x[i]] += 1.0;
    py[labels[i]] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [xy, c] : joint) {
    const double pxy = c / n;
    mi += pxy * std::log2(pxy / ((px[xy.first] / n) * (py[xy.second] / n)));
  }
  return std::max(mi, 0.0);
}

struct RankedFeature {
  std::string name;
  double mi;
};

inline std::vector<RankedFeature> rank_by_mutual_information(const FeatureMatrix& train,
                                                             int bins = 8) {
  const auto y = train.labels();
  std::vector<RankedFeature> ranked;
  ranked.reserve(train.column_count());
  for (std::size_t j = 0; j < train.column_count(); ++j) {
    const auto col = train.column(j);
    ranked.push_back({train.column_names[j], mutual_information(col, y, bins)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.mi != b.mi) return a.mi > b.mi;
    return a.name < b.name;
  });
  return ranked;
}

/// The ceil(d/2) columns of highest MI on the training rows (ties by name),
/// returned in the matrix's column order.
inline std::vector<std::string> select_top_half(const FeatureMatrix& train, int bins = 8) {
  const auto ranked = rank_by_mutual_information(train, bins);
  const auto keep = (ranked.size() + 1) / 2;
  std::set<std::string> chosen;
  for (std::size_t i = 0; i < keep; ++i) chosen.insert(ranked[i].name);
  std::vector<std::string> out;
  out.reserve(keep);
  for (const auto& n : train.column_names) {
    if (chosen.contains(n)) out.push_back(n);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset materialization

struct DatasetOptions {
  TemporalOptions temporal{};
  int mi_bins = 8;
  bool select_features = true;
};

struct SplitDataset {
  FeatureMatrix train;
  FeatureMatrix test;
  ColumnConditioner conditioner;
  std::vector<std::string> selected;  // columns kept after MI selection
};

/// Per-condition samples with their split-independent raw features cached.
/// Borrowed logs must outlive the store. Read-only after construction, so a
/// store can be shared by concurrent split jobs.
class FeatureStore {
 public:
  FeatureStore(const Corpus& corpus, std::span<const Condition> conditions) {
    for (auto c : conditions) {
      if (pools_.contains(c)) continue;
      Pool p;
      auto set = build_samples(corpus, c);
      p.samples = std::move(set.samples);
      p.warnings = std::move(set.warnings);
      for (const auto& s : p.samples) p.temporal.push_back(temporal_values(s.logs));
      p.rhythmic = raw_rhythmic_matrix(p.samples);
      pools_.emplace(c, std::move(p));
    }
  }

  FeatureStore(const Corpus& corpus, Regime regime)
      : FeatureStore(corpus, conditions_of(regime)) {}

  const std::vector<Sample>& samples(Condition c) const { return pool(c).samples; }
  const std::vector<std::string>& warnings(Condition c) const { return pool(c).warnings; }

  SplitDataset materialize(const SplitPlan& plan, Regime regime, FeatureFamily family,
                           const DatasetOptions& opts = {}) const {
    const auto [train_c, test_c] = regime_conditions(regime);
    const auto train_idx = rows_for(pool(train_c), plan.train_users);
    const auto test_idx = rows_for(pool(test_c), plan.test_users);

    FeatureMatrix raw_train;
    FeatureMatrix raw_test;
    ColumnConditioner::Options cond_opts;
    if (family == FeatureFamily::Temporal) {
      std::map<std::string, std::set<std::string>> names_by_user;
      for (auto i : train_idx) {
        auto& names = names_by_user[pool(train_c).samples[i].key.user_id];
        for (const auto& [name, v] : pool(train_c).temporal[i]) names.insert(name);
      }
      const auto features =
          select_common_features(names_by_user, opts.temporal.coverage_threshold);
      raw_train = temporal_rows(pool(train_c), train_idx, features);
      raw_test = temporal_rows(pool(test_c), test_idx, features);
      cond_opts = opts.temporal.conditioning;
    } else {
      raw_train = subset_rows(pool(train_c).rhythmic, train_idx);
      raw_test = subset_rows(pool(test_c).rhythmic, test_idx);
      cond_opts = rhythmic_conditioning();
    }

    SplitDataset out;
    out.conditioner = ColumnConditioner::fit(raw_train, cond_opts);
    out.train = out.conditioner.transform(std::move(raw_train));
    out.test = out.conditioner.transform(std::move(raw_test));
    if (opts.select_features) {
      out.selected = select_top_half(out.train, opts.mi_bins);
      out.train = out.train.select(out.selected);
      out.test = out.test.select(out.selected);
    } else {
      out.selected = out.train.column_names;
    }
    return out;
  }

  static std::vector<Condition> conditions_of(Regime r) {
    const auto [a, b] = regime_conditions(r);
    if (a == b) return {a};
    return {a, b};
  }

 private:
  struct Pool {
    std::vector<Sample> samples;
    std::vector<std::string> warnings;
    std::vector<TemporalValues> temporal;
    FeatureMatrix rhythmic;
  };

  const Pool& pool(Condition c) const {
    auto it = pools_.find(c);
    if (it == pools_.end()) {
      throw Error("feature store has no samples for condition " + std::string(condition_name(c)));
    }
    return it->second;
  }

  static std::vector<std::size_t> rows_for(const Pool& p, const std::set<std::string>& users) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
      if (users.contains(p.samples[i].key.user_id)) idx.push_back(i);
    }
    return idx;
  }

  static FeatureMatrix subset_rows(const FeatureMatrix& m, std::span<const std::size_t> idx) {
    FeatureMatrix out;
    out.column_names = m.column_names;
    for (auto i : idx) {
      out.rows.push_back(m.rows[i]);
      out.row_keys.push_back(m.row_keys[i]);
    }
    return out;
  }

  static FeatureMatrix temporal_rows(const Pool& p, std::span<const std::size_t> idx,
                                     std::span<const std::string> features) {
    FeatureMatrix m;
    m.column_names = temporal_column_names(features);
    for (auto i : idx) {
      const auto& values = p.temporal[i];
      std::vector<double> row;
      row.reserve(m.column_names.size());
      for (const auto& f : features) {
        auto it = values.find(f);
        const auto s = it == values.end() ? stats::Summary5{} : stats::summarize5(it->second);
        for (double v : s.as_array()) row.push_back(v);
      }
      m.rows.push_back(std::move(row));
      m.row_keys.push_back(p.samples[i].key);
    }
    return m;
  }

  std::map<Condition, Pool> pools_;
};

struct AssembledDataset {
  FeatureMatrix matrix;
  std::vector<std::string> warnings;
};

/// One row per (user, scenario) in the condition, conditioned on the whole
/// corpus. Used for exporting features; experiments go through FeatureStore.
inline AssembledDataset assemble_dataset(const Corpus& corpus, Condition condition,
                                         FeatureFamily family, const DatasetOptions& opts = {}) {
  auto set = build_samples(corpus, condition);
  AssembledDataset out;
  out.warnings = std::move(set.warnings);
  if (family == FeatureFamily::Temporal) {
    const auto features = select_common_features(temporal_names_by_user(set.samples),
                                                 opts.temporal.coverage_threshold);
    auto raw = raw_temporal_matrix(set.samples, features);
    out.matrix =
        ColumnConditioner::fit(raw, opts.temporal.conditioning).transform(std::move(raw));
  } else {
    auto raw = raw_rhythmic_matrix(set.samples);
    out.matrix = ColumnConditioner::fit(raw, rhythmic_conditioning()).transform(std::move(raw));
  }
  return out;
}

}  // namespace keytrace
