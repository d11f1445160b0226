#pragma once

// Accuracy, per-class recall, confusion aggregation and accuracy curves.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "keylog.hpp"

namespace keytrace {

// rows = true class, columns = predicted, both in Scenario order
struct ConfusionMatrix3 {
  std::array<std::array<std::int64_t, 3>, 3> counts{};

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& r : counts) {
      for (auto c : r) t += c;
    }
    return t;
  }

  std::int64_t trace() const { return counts[0][0] + counts[1][1] + counts[2][2]; }

  std::int64_t support(int true_class) const {
    const auto& r = counts[static_cast<std::size_t>(true_class)];
    return r[0] + r[1] + r[2];
  }

  double accuracy() const {
    const auto t = total();
    if (t == 0) throw Error("accuracy of an empty confusion matrix");
    return static_cast<double>(trace()) / static_cast<double>(t);
  }

  ConfusionMatrix3& operator+=(const ConfusionMatrix3& o) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) counts[i][j] += o.counts[i][j];
    }
    return *this;
  }

  friend bool operator==(const ConfusionMatrix3&, const ConfusionMatrix3&) = default;
};

inline ConfusionMatrix3 confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw Error("label vectors differ in length");
  ConfusionMatrix3 cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] > 2 || y_pred[i] < 0 || y_pred[i] > 2) {
      throw Error("class label out of range");
    }
    ++cm.counts[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  }
  return cm;
}

inline double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) throw Error("label vectors differ in length");
  if (y_true.empty()) throw Error("accuracy of an empty prediction set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) correct += y_true[i] == y_pred[i];
  return static_cast<double>(correct) / static_cast<double>(y_true.size());
}

/// diagonal / row sum; nullopt for a class with no support.
inline std::array<std::optional<double>, 3> per_class_recall(const ConfusionMatrix3& cm) {
  std::array<std::optional<double>, 3> r;
  for (int k = 0; k < 3; ++k) {
    const auto s = cm.support(k);
    if (s > 0) {
      r[static_cast<std::size_t>(k)] =
          static_cast<double>(cm.counts[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)]) /
          static_cast<double>(s);
    }
  }
  return r;
}

inline ConfusionMatrix3 aggregate_confusions(std::span<const ConfusionMatrix3> cms) {
  ConfusionMatrix3 sum;
  for (const auto& cm : cms) sum += cm;
  return sum;
}

// Percentages to two decimals, e.g. 96.19.
inline std::string percent(double fraction) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << fraction * 100.0;
  return o.str();
}

// ---------------------------------------------------------------------------
// Results and curves

struct SplitResult {
  int split_id = 0;
  int train_percent = 0;
  int trial = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  double accuracy = 0.0;
  ConfusionMatrix3 confusion;
  std::string model;           // describe() of the fitted spec
  double cv_fitness = -1.0;    // best GA fitness, -1 when no search ran
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
};

struct CurvePoint {
  int train_percent = 0;
  std::size_t trials = 0;  // completed trials
  std::optional<double> mean;
  std::optional<double> min;
  std::optional<double> max;

  bool complete() const { return trials == static_cast<std::size_t>(kTrialsPerFraction); }
};

// One point per training fraction; the band is min-max over trials.
struct AccuracyCurve {
  std::vector<CurvePoint> points;

  bool complete() const {
    return points.size() == static_cast<std::size_t>(kFractionCount) &&
           std::all_of(points.begin(), points.end(), [](const auto& p) { return p.complete(); });
  }
};

/// Fractions without any successful trial keep empty statistics; nothing
/// is interpolated.
inline AccuracyCurve build_curves(std::span<const SplitResult> results) {
  std::map<int, std::vector<double>> by_pct;
  for (const auto& r : results) {
    if (r.ok()) by_pct[r.train_percent].push_back(r.accuracy);
  }
  AccuracyCurve curve;
  for (int pct = kMinTrainPercent; pct <= kMaxTrainPercent; pct += kPercentStep) {
    CurvePoint p;
    p.train_percent = pct;
    auto it = by_pct.find(pct);
    if (it != by_pct.end() && !it->second.empty()) {
      const auto& v = it->second;
      p.trials = v.size();
      double s = 0.0;
      for (double a : v) s += a;
      p.mean = s / static_cast<double>(v.size());
      p.min = *std::min_element(v.begin(), v.end());
      p.max = *std::max_element(v.begin(), v.end());
    }
    curve.points.push_back(p);
  }
  return curve;
}

/// Element-wise sum of the confusions of the successful 70-30 trials.
inline ConfusionMatrix3 standard_confusion(std::span<const SplitResult> results) {
  ConfusionMatrix3 sum;
  for (const auto& r : results) {
    if (r.ok() && r.train_percent == kMaxTrainPercent) sum += r.confusion;
  }
  return sum;
}

inline void write_curve_csv(const AccuracyCurve& c, std::ostream& out) {
  out << "train_percent,trials,mean_accuracy,min_accuracy,max_accuracy\n";
  auto cell = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& p : c.points) {
    out << p.train_percent << ',' << p.trials << ',' << cell(p.mean) << ',' << cell(p.min) << ','
        << cell(p.max) << '\n';
  }
}

inline void write_confusion_csv(const ConfusionMatrix3& cm, std::ostream& out) {
  out << "true_class,predicted_class,count,row_percent\n";
  for (int i = 0; i < 3; ++i) {
    const auto support = cm.support(i);
    for (int j = 0; j < 3; ++j) {
      const auto c = cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out << scenario_name(scenario_from_index(i)) << ',' << scenario_name(scenario_from_index(j))
          << ',' << c << ','
          << (support > 0 ? percent(static_cast<double>(c) / static_cast<double>(support)) : "")
          << '\n';
    }
  }
}

inline void write_recall_csv(const ConfusionMatrix3& cm, std::ostream& out) {
  out << "class,correct,support,recall_percent\n";
  const auto recall = per_class_recall(cm);
  for (int k = 0; k < 3; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    out << scenario_name(scenario_from_index(k)) << ',' << cm.counts[ku][ku] << ',' << cm.support(k)
        << ',' << (recall[ku] ? percent(*recall[ku]) : "undefined") << '\n';
  }
}

inline void write_results_csv(std::span<const SplitResult> results, std::ostream& out) {
  out << "split_id,train_percent,trial,train_rows,test_rows,accuracy,cv_fitness,model,status\n";
  for (const auto& r : results) {
    out << r.split_id << ',' << r.train_percent << ',' << r.trial << ',' << r.train_rows << ','
        << r.test_rows << ',' << (r.ok() ? format_number(r.accuracy) : "") << ','
        << (r.cv_fitness >= 0 ? format_number(r.cv_fitness) : "") << ',' << csv_field(r.model)
        << ',' << csv_field(r.ok() ? "ok" : "error: " + *r.error) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Reports

struct RunSummary {
  std::string regime;
  std::string family;
  std::string classifier;
  std::uint64_t seed = 0;
  std::string manifest_hash;
  std::vector<SplitResult> results;
};

inline void write_confusion_table(const ConfusionMatrix3& cm, std::ostream& out) {
  out << "| true \\ predicted | BonaFide | Paraphrased | Transcribed |\n";
  out << "|---|---|---|---|\n";
  for (int i = 0; i < 3; ++i) {
    const auto support = cm.support(i);
    out << "| " << scenario_name(scenario_from_index(i)) << " |";
    for (int j = 0; j < 3; ++j) {
      const auto c = cm.counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      out << ' ' << c;
      if (support > 0) out << " (" << percent(static_cast<double>(c) / static_cast<double>(support)) << "%)";
      out << " |";
    }
    out << '\n';
  }
}

inline void write_run_section(const RunSummary& run, std::ostream& out) {
  out << "## " << run.regime << " / " << run.family << " / " << run.classifier << "\n\n";
  out << "- regime: " << run.regime << "\n- feature family: " << run.family
      << "\n- classifier: " << run.classifier << "\n- seed: " << run.seed
      << "\n- manifest hash: " << run.manifest_hash << '\n';
  std::size_t failed = 0;
  for (const auto& r : run.results) failed += !r.ok();
  out << "- splits: " << run.results.size() << " (" << failed << " failed)\n";
  for (const auto& r : run.results) {
    if (!r.ok()) out << "  - split " << r.split_id << " failed: " << *r.error << '\n';
  }
  out << '\n';

  const auto curve = build_curves(run.results);
  out << "### Accuracy by training fraction\n\n| train % | trials | mean | min | max |\n|---|---|---|---|---|\n";
  for (const auto& p : curve.points) {
    if (p.trials == 0) continue;
    out << "| " << p.train_percent << " | " << p.trials << " | " << percent(*p.mean) << " | "
        << percent(*p.min) << " | " << percent(*p.max) << " |\n";
  }
  const auto missing = std::count_if(curve.points.begin(), curve.points.end(),
                                     [](const auto& p) { return !p.complete(); });
  if (missing > 0) out << "\n" << missing << " of " << curve.points.size() << " fractions are incomplete.\n";

  const auto cm = standard_confusion(run.results);
  if (cm.total() > 0) {
    out << "\n### Aggregated 70-30 confusion matrix\n\n";
    write_confusion_table(cm, out);
    const auto recall = per_class_recall(cm);
    out << "\nPer-class recall:";
    for (int k = 0; k < 3; ++k) {
      const auto& r = recall[static_cast<std::size_t>(k)];
      out << ' ' << scenario_name(scenario_from_index(k)) << ' ' << (r ? percent(*r) + "%" : "undefined")
          << (k < 2 ? "," : "");
    }
    out << "\nAggregate accuracy: " << percent(cm.accuracy()) << "%\n";
  }
  out << '\n';
}

inline double mean_accuracy(std::span<const SplitResult> results, bool standard_only) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : results) {
    if (!r.ok() || (standard_only && r.train_percent != kMaxTrainPercent)) continue;
    s += r.accuracy;
    ++n;
  }
  return n == 0 ? std::nan("") : s / static_cast<double>(n);
}

/// Markdown report over one or more runs, with a transfer comparison when
/// cross-cognition runs are present.
inline std::string render_report(std::span<const RunSummary> runs) {
  std::ostringstream out;
  out << "# Keystroke scenario classification report\n\n";
  for (const auto& run : runs) write_run_section(run, out);

  std::vector<const RunSummary*> cross;
  for (const auto& r : runs) {
    if (r.regime == "hl" || r.regime == "lh") cross.push_back(&r);
  }
  if (!cross.empty()) {
    out << "## Cross-cognition transfer\n\n";
    out << "| regime | classifier | temporal accuracy | rhythmic accuracy | rhythmic - temporal |\n";
    out << "|---|---|---|---|---|\n";
    std::map<std::pair<std::string, std::string>, std::map<std::string, double>> table;
    for (const auto* r : cross) {
      table[{r->regime, r->classifier}][r->family] = mean_accuracy(r->results, true);
    }
    for (const auto& [key, fam] : table) {
      auto cell = [&](const char* f) {
        auto it = fam.find(f);
        return it == fam.end() || std::isnan(it->second) ? std::string("n/a") : percent(it->second) + "%";
      };
      std::string diff = "n/a";
      if (fam.contains("temporal") && fam.contains("rhythmic") && !std::isnan(fam.at("temporal")) &&
          !std::isnan(fam.at("rhythmic"))) {
        diff = percent(fam.at("rhythmic") - fam.at("temporal")) + " pts";
      }
      out << "| " << key.first << " | " << key.second << " | " << cell("temporal") << " | "
          << cell("rhythmic") << " | " << diff << " |\n";
    }
    out << "\nAccuracies are means over the 70-30 trials.\n";
  }
  return out.str();
}

}  // namespace keytrace
