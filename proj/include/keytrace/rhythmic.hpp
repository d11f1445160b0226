#pragma once

// Pause, burst and revision rhythm features: 15 value lists summarized by
// seven statistics each, plus two entropies, for 107 features.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "feature_matrix.hpp"
#include "keylog.hpp"
#include "preprocess.hpp"
#include "samples.hpp"
#include "stats.hpp"

namespace keytrace {

inline constexpr std::size_t kPauseBins = 9;

// Right-closed 300 ms bins: (3,300], (300,600], ..., (2100,2400], (2400,inf).
struct PauseBinning {
  static constexpr std::array<double, kPauseBins + 1> edges{
      3, 300, 600, 900, 1200, 1500, 1800, 2100, 2400, std::numeric_limits<double>::infinity()};

  std::optional<long long> bin_of(double interval_ms) const {
    if (!(interval_ms > edges.front())) return std::nullopt;
    for (std::size_t i = 0; i < kPauseBins; ++i) {
      if (interval_ms <= edges[i + 1]) return static_cast<long long>(i);
    }
    return static_cast<long long>(kPauseBins - 1);
  }
};

// Unit-width integer bins, used for burst lengths.
struct UnitBinning {
  std::optional<long long> bin_of(double v) const {
    return static_cast<long long>(std::floor(v));
  }
};

// A long pause at or above this ends a P-burst.
inline constexpr double kPBurstPauseMs = 2000.0;

enum class BurstKind { PBurst, RBurst, DeleteBurst };

struct Burst {
  BurstKind kind;
  std::size_t length_keystrokes;
  double duration_ms;
  // position of the first keystroke among the log's Down events
  std::size_t start_index;

  friend bool operator==(const Burst&, const Burst&) = default;
};

inline bool is_word_boundary(const KeyEvent& ev) {
  return ev.key_code == "Space" || ev.key_value == " ";
}

inline bool is_sentence_terminator(const KeyEvent& ev) {
  return ev.key_value == "." || ev.key_value == "?" || ev.key_value == "!";
}

namespace detail {

inline std::vector<const KeyEvent*> downs_of(const KeystrokeLog& log) {
  std::vector<const KeyEvent*> d;
  for (const auto& ev : log.events) {
    if (ev.is_down()) d.push_back(&ev);
  }
  return d;
}

inline double gap(const KeyEvent* a, const KeyEvent* b) {
  return static_cast<double>(b->timestamp_ms - a->timestamp_ms);
}

}  // namespace detail

/// Down-Down intervals above 3 ms, sorted into the nine pause bins.
inline std::array<std::vector<double>, kPauseBins> extract_binned_pauses(const KeystrokeLog& log) {
  std::array<std::vector<double>, kPauseBins> bins;
  const PauseBinning binning;
  const auto downs = detail::downs_of(log);
  for (std::size_t i = 1; i < downs.size(); ++i) {
    const double g = detail::gap(downs[i - 1], downs[i]);
    if (auto b = binning.bin_of(g)) bins[static_cast<std::size_t>(*b)].push_back(g);
  }
  return bins;
}

struct StructuralPauses {
  std::vector<double> inter_word;
  std::vector<double> inter_sentence;
  std::vector<double> pre_delete;
};

// inter-word: interval after Space; inter-sentence: after . ? !;
// pre-delete: interval into the first deletion of a deletion run.
inline StructuralPauses extract_structural_pauses(const KeystrokeLog& log) {
  StructuralPauses out;
  const auto downs = detail::downs_of(log);
  for (std::size_t i = 1; i < downs.size(); ++i) {
    const auto* left = downs[i - 1];
    const auto* right = downs[i];
    const double g = detail::gap(left, right);
    if (is_word_boundary(*left)) out.inter_word.push_back(g);
    if (is_sentence_terminator(*left)) out.inter_sentence.push_back(g);
    if (is_deletion_key(*right) && !is_deletion_key(*left)) out.pre_delete.push_back(g);
  }
  return out;
}

inline std::vector<Burst> extract_p_bursts(const KeystrokeLog& log) {
  std::vector<Burst> out;
  const auto downs = detail::downs_of(log);
  if (downs.empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= downs.size(); ++i) {
    if (i == downs.size() || detail::gap(downs[i - 1], downs[i]) >= kPBurstPauseMs) {
      out.push_back({BurstKind::PBurst, i - start, detail::gap(downs[start], downs[i - 1]), start});
      start = i;
    }
  }
  return out;
}

// Production runs cut short by a deletion; the deletion is not counted.
inline std::vector<Burst> extract_r_bursts(const KeystrokeLog& log) {
  std::vector<Burst> out;
  const auto downs = detail::downs_of(log);
  std::optional<std::size_t> start;
  for (std::size_t i = 0; i < downs.size(); ++i) {
    if (!is_deletion_key(*downs[i])) {
      if (!start) start = i;
      continue;
    }
    if (start) {
      out.push_back({BurstKind::RBurst, i - *start, detail::gap(downs[*start], downs[i - 1]), *start});
      start.reset();
    }
  }
  return out;
}

inline std::vector<Burst> extract_delete_bursts(const KeystrokeLog& log) {
  std::vector<Burst> out;
  const auto downs = detail::downs_of(log);
  std::optional<std::size_t> start;
  for (std::size_t i = 0; i <= downs.size(); ++i) {
    const bool deleting = i < downs.size() && is_deletion_key(*downs[i]);
    if (deleting) {
      if (!start) start = i;
    } else if (start) {
      out.push_back(
          {BurstKind::DeleteBurst, i - *start, detail::gap(downs[*start], downs[i - 1]), *start});
      start.reset();
    }
  }
  return out;
}

inline stats::Summary7 summarize7(std::span<const double> values) {
  return stats::summarize7(values);
}

/// Entropy in bits of the histogram induced by `binning`; values the
/// binning rejects are ignored. Empty input gives 0.
template <typename Binning>
double shannon_entropy(std::span<const double> values, const Binning& binning) {
  std::map<long long, std::size_t> hist;
  for (double v : values) {
    if (auto b = binning.bin_of(v)) ++hist[*b];
  }
  return stats::entropy_bits(hist);
}

inline constexpr std::size_t kRhythmicTypes = 15;
inline constexpr std::size_t kRhythmicStats = 7;
inline constexpr std::size_t kRhythmicDims = kRhythmicTypes * kRhythmicStats + 2;

inline const std::array<std::string, kRhythmicTypes>& rhythmic_type_names() {
  static const std::array<std::string, kRhythmicTypes> names{
      "pause_bin1", "pause_bin2",     "pause_bin3",          "pause_bin4",
      "pause_bin5", "pause_bin6",     "pause_bin7",          "pause_bin8",
      "pause_bin9", "pburst",         "rburst",              "delburst",
      "interword_pause", "intersentence_pause", "predelete_pause"};
  return names;
}

inline const std::vector<std::string>& rhythmic_feature_names() {
  static const std::vector<std::string> names = [] {
    static constexpr std::array<std::string_view, kRhythmicStats> stat{
        "mean", "std", "total", "count", "median", "q1", "q3"};
    std::vector<std::string> n;
    for (const auto& t : rhythmic_type_names()) {
      for (auto s : stat) n.push_back(t + "_" + std::string(s));
    }
    n.push_back("pause_entropy");
    n.push_back("pburst_entropy");
    return n;
  }();
  return names;
}

using RhythmicVector = std::array<double, kRhythmicDims>;

/// Pools the 15 value lists over `logs` (each log contributes its own
/// intervals and bursts) and summarizes them. Burst lists carry durations;
/// the P-burst entropy uses burst lengths.
inline RhythmicVector build_rhythmic_vector(std::span<const KeystrokeLog* const> logs) {
  std::array<std::vector<double>, kRhythmicTypes> lists;
  std::vector<double> pauses;
  std::vector<double> pburst_lengths;
  for (const auto* log : logs) {
    auto bins = extract_binned_pauses(*log);
    for (std::size_t b = 0; b < kPauseBins; ++b) {
      lists[b].insert(lists[b].end(), bins[b].begin(), bins[b].end());
      pauses.insert(pauses.end(), bins[b].begin(), bins[b].end());
    }
    for (const auto& burst : extract_p_bursts(*log)) {
      lists[9].push_back(burst.duration_ms);
      pburst_lengths.push_back(static_cast<double>(burst.length_keystrokes));
    }
    for (const auto& burst : extract_r_bursts(*log)) lists[10].push_back(burst.duration_ms);
    for (const auto& burst : extract_delete_bursts(*log)) lists[11].push_back(burst.duration_ms);
    auto structural = extract_structural_pauses(*log);
    lists[12].insert(lists[12].end(), structural.inter_word.begin(), structural.inter_word.end());
    lists[13].insert(lists[13].end(), structural.inter_sentence.begin(),
                     structural.inter_sentence.end());
    lists[14].insert(lists[14].end(), structural.pre_delete.begin(), structural.pre_delete.end());
  }

  RhythmicVector v{};
  std::size_t k = 0;
  for (const auto& list : lists) {
    for (double s : stats::summarize7(list).as_array()) v[k++] = s;
  }
  v[k++] = shannon_entropy(std::span<const double>(pauses), PauseBinning{});
  v[k++] = shannon_entropy(std::span<const double>(pburst_lengths), UnitBinning{});
  return v;
}

inline RhythmicVector build_rhythmic_vector(const KeystrokeLog& log) {
  const KeystrokeLog* one[] = {&log};
  return build_rhythmic_vector(std::span<const KeystrokeLog* const>(one));
}

/// Unconditioned rhythmic matrix (missing where a list was empty).
inline FeatureMatrix raw_rhythmic_matrix(std::span<const Sample> samples) {
  FeatureMatrix m;
  m.column_names = rhythmic_feature_names();
  for (const auto& s : samples) {
    const auto v = build_rhythmic_vector(s.logs);
    m.rows.emplace_back(v.begin(), v.end());
    m.row_keys.push_back(s.key);
  }
  return m;
}

// Rhythmic columns are imputed with training medians but not clipped.
inline ColumnConditioner::Options rhythmic_conditioning() {
  ColumnConditioner::Options o;
  o.clip = false;
  return o;
}

}  // namespace keytrace
