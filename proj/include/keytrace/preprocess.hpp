#pragma once

// Repairs for the systematic defects found in raw browser keystroke logs:
//   1. "Unidentified" events emitted after a CapsLock press
//   2. auto-repeat (many Downs, one Up) on held keys
//   3. Up events carrying the Shift variant of their Down (or the reverse)
// followed by a pairing validation that drops whatever is still unmatched.
// Every mutation produces one CorrectionRecord whose event_index refers to
// the position in the log handed to the public entry point.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "keylog.hpp"

namespace keytrace {

enum class CorrectionKind { DroppedUnidentified, CollapsedRepeat, ShiftRelabel, OrphanDropped };

inline std::string_view correction_kind_name(CorrectionKind k) {
  switch (k) {
    case CorrectionKind::DroppedUnidentified: return "DroppedUnidentified";
    case CorrectionKind::CollapsedRepeat: return "CollapsedRepeat";
    case CorrectionKind::ShiftRelabel: return "ShiftRelabel";
    case CorrectionKind::OrphanDropped: return "OrphanDropped";
  }
  return "?";
}

struct CorrectionRecord {
  CorrectionKind kind;
  std::size_t event_index;
  std::string before;
  std::string after;
  // events removed from the log by this correction (0 for a relabel)
  std::size_t removed = 0;
  // Unidentified without a preceding CapsLock Down, or a relabel between
  // values that are not a known Shift pair
  bool flagged = false;

  friend bool operator==(const CorrectionRecord&, const CorrectionRecord&) = default;
};

using CorrectionLedger = std::vector<CorrectionRecord>;

/// Base key value -> Shift-layer key value. Must be bijective.
class ShiftPairTable {
 public:
  ShiftPairTable() = default;

  explicit ShiftPairTable(std::map<std::string, std::string> base_to_shifted)
      : base_to_shifted_(std::move(base_to_shifted)) {
    for (const auto& [base, shifted] : base_to_shifted_) {
      if (base == shifted) throw Error("shift pair maps '" + base + "' to itself");
      if (!shifted_to_base_.emplace(shifted, base).second) {
        throw Error("shift pair table is not bijective at '" + shifted + "'");
      }
      if (base_to_shifted_.contains(shifted) || shifted_to_base_.contains(base)) {
        throw Error("key '" + base + "' appears on both sides of the shift table");
      }
    }
  }

  // Dubeolsik jamo pairs plus the US-ASCII shift layer.
  static ShiftPairTable dubeolsik() {
    std::map<std::string, std::string> m{{"ㄱ", "ㄲ"}, {"ㄷ", "ㄸ"}, {"ㅂ", "ㅃ"}, {"ㅅ", "ㅆ"},
                                         {"ㅈ", "ㅉ"}, {"ㅐ", "ㅒ"}, {"ㅔ", "ㅖ"}};
    for (char c = 'a'; c <= 'z'; ++c) {
      m.emplace(std::string(1, c), std::string(1, static_cast<char>(c - 'a' + 'A')));
    }
    constexpr std::string_view base = "1234567890-=[]\\;',./`";
    constexpr std::string_view shifted = "!@#$%^&*()_+{}|:\"<>?~";
    for (std::size_t i = 0; i < base.size(); ++i) {
      m.emplace(std::string(1, base[i]), std::string(1, shifted[i]));
    }
    return ShiftPairTable(std::move(m));
  }

  const std::map<std::string, std::string>& pairs() const { return base_to_shifted_; }

  // the other member of a's pair, if any
  std::optional<std::string> partner(std::string_view a) const {
    if (auto it = base_to_shifted_.find(std::string(a)); it != base_to_shifted_.end()) return it->second;
    if (auto it = shifted_to_base_.find(std::string(a)); it != shifted_to_base_.end()) return it->second;
    return std::nullopt;
  }

  bool related(std::string_view a, std::string_view b) const {
    if (a == b) return true;
    auto it = base_to_shifted_.find(std::string(a));
    if (it != base_to_shifted_.end() && it->second == b) return true;
    it = shifted_to_base_.find(std::string(a));
    return it != shifted_to_base_.end() && it->second == b;
  }

 private:
  std::map<std::string, std::string> base_to_shifted_;
  std::map<std::string, std::string> shifted_to_base_;
};

struct PreprocessResult {
  KeystrokeLog log;
  CorrectionLedger ledger;
};

inline bool is_deletion_key(const KeyEvent& ev) {
  return ev.key_value == "Backspace" || ev.key_value == "Delete" || ev.key_code == "Backspace" ||
         ev.key_code == "Delete";
}

namespace detail {

struct TracedEvent {
  std::size_t origin;
  KeyEvent event;
};

using Trace = std::vector<TracedEvent>;

inline Trace trace_of(const KeystrokeLog& log) {
  Trace t;
  t.reserve(log.events.size());
  for (std::size_t i = 0; i < log.events.size(); ++i) t.push_back({i, log.events[i]});
  return t;
}

inline KeystrokeLog log_of(const KeystrokeLog& like, const Trace& trace) {
  KeystrokeLog out{like.user_id, like.task, {}};
  out.events.reserve(trace.size());
  for (const auto& t : trace) out.events.push_back(t.event);
  return out;
}

inline bool is_capslock_down(const KeyEvent& ev) {
  return ev.is_down() && (ev.key_value == "CapsLock" || ev.key_code == "CapsLock");
}

inline Trace drop_unidentified(Trace in, CorrectionLedger& ledger) {
  Trace out;
  out.reserve(in.size());
  // whether the nearest earlier event that is not itself Unidentified is a CapsLock Down
  bool after_capslock = false;
  for (auto& t : in) {
    if (t.event.key_value == "Unidentified") {
      ledger.push_back({CorrectionKind::DroppedUnidentified, t.origin, t.event.key_value, "", 1,
                        !after_capslock});
      continue;
    }
    after_capslock = is_capslock_down(t.event);
    out.push_back(std::move(t));
  }
  return out;
}

inline Trace collapse_repeats(Trace in, CorrectionLedger& ledger) {
  struct Run {
    std::size_t first_absorbed = 0;
    std::size_t absorbed = 0;
    std::string value;
  };
  std::map<std::string, Run> open;
  Trace out;
  out.reserve(in.size());
  auto flush = [&ledger](const Run& r) {
    if (r.absorbed > 0) {
      ledger.push_back(
          {CorrectionKind::CollapsedRepeat, r.first_absorbed, r.value, r.value, r.absorbed, false});
    }
  };
  for (auto& t : in) {
    const auto& code = t.event.key_code;
    if (t.event.is_down()) {
      auto it = open.find(code);
      if (it != open.end()) {
        if (it->second.absorbed++ == 0) it->second.first_absorbed = t.origin;
        continue;
      }
      open.emplace(code, Run{0, 0, t.event.key_value});
    } else if (auto it = open.find(code); it != open.end()) {
      flush(it->second);
      open.erase(it);
    }
    out.push_back(std::move(t));
  }
  for (const auto& [code, run] : open) flush(run);
  return out;
}

inline Trace relabel_shift_variants(Trace in, const ShiftPairTable& table,
                                    CorrectionLedger& ledger) {
  std::map<std::string, std::size_t> open;  // key_code -> position in out
  Trace out;
  out.reserve(in.size());
  for (auto& t : in) {
    auto& ev = t.event;
    if (ev.is_down()) {
      open[ev.key_code] = out.size();
      out.push_back(std::move(t));
      continue;
    }
    auto it = open.find(ev.key_code);
    if (it == open.end()) {
      ledger.push_back({CorrectionKind::OrphanDropped, t.origin, ev.key_value, "", 1, false});
      continue;
    }
    const auto& down_value = out[it->second].event.key_value;
    if (ev.key_value != down_value) {
      ledger.push_back({CorrectionKind::ShiftRelabel, t.origin, ev.key_value, down_value, 0,
                        !table.related(ev.key_value, down_value)});
      ev.key_value = down_value;
    }
    open.erase(it);
    out.push_back(std::move(t));
  }
  return out;
}

// Drops every Down that is not closed by a later Up of the same code
// before another Down of that code.
inline Trace drop_unmatched_downs(Trace in, CorrectionLedger& ledger) {
  std::vector<bool> keep(in.size(), true);
  std::map<std::string, std::size_t> open;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto& ev = in[i].event;
    if (ev.is_down()) {
      if (auto it = open.find(ev.key_code); it != open.end()) keep[it->second] = false;
      open[ev.key_code] = i;
    } else if (auto it = open.find(ev.key_code); it != open.end()) {
      open.erase(it);
    } else {
      keep[i] = false;
    }
  }
  for (const auto& [code, i] : open) keep[i] = false;

  Trace out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (keep[i]) {
      out.push_back(std::move(in[i]));
    } else {
      ledger.push_back(
          {CorrectionKind::OrphanDropped, in[i].origin, in[i].event.key_value, "", 1, false});
    }
  }
  return out;
}

inline void sort_ledger(CorrectionLedger& ledger) {
  std::stable_sort(ledger.begin(), ledger.end(),
                   [](const auto& a, const auto& b) { return a.event_index < b.event_index; });
}

}  // namespace detail

/// Removes every "Unidentified" event.
inline PreprocessResult drop_unidentified(const KeystrokeLog& log) {
  CorrectionLedger ledger;
  auto trace = detail::drop_unidentified(detail::trace_of(log), ledger);
  return {detail::log_of(log, trace), std::move(ledger)};
}

/// Reduces each auto-repeat run of one key code to its first Down and its Up.
/// One record per run; `removed` counts the absorbed Downs.
inline PreprocessResult collapse_repeats(const KeystrokeLog& log) {
  CorrectionLedger ledger;
  auto trace = detail::collapse_repeats(detail::trace_of(log), ledger);
  detail::sort_ledger(ledger);
  return {detail::log_of(log, trace), std::move(ledger)};
}

/// The Down event is authoritative: each Up takes its Down's key value.
/// Ups with no open Down are dropped.
inline PreprocessResult relabel_shift_variants(const KeystrokeLog& log,
                                               const ShiftPairTable& table) {
  CorrectionLedger ledger;
  auto trace = detail::relabel_shift_variants(detail::trace_of(log), table, ledger);
  return {detail::log_of(log, trace), std::move(ledger)};
}

/// Full repair chain plus pairing validation. Never throws on log content;
/// every anomaly becomes a ledger record.
inline PreprocessResult preprocess(const KeystrokeLog& log,
                                   const ShiftPairTable& table = ShiftPairTable::dubeolsik()) {
  CorrectionLedger ledger;
  auto trace = detail::trace_of(log);
  trace = detail::drop_unidentified(std::move(trace), ledger);
  trace = detail::collapse_repeats(std::move(trace), ledger);
  trace = detail::relabel_shift_variants(std::move(trace), table, ledger);
  trace = detail::drop_unmatched_downs(std::move(trace), ledger);
  detail::sort_ledger(ledger);
  return {detail::log_of(log, trace), std::move(ledger)};
}

/// True when, per key code, Downs and Ups alternate starting with a Down
/// and every Down is closed.
inline bool satisfies_pairing(const KeystrokeLog& log) {
  std::map<std::string, int> depth;
  for (const auto& ev : log.events) {
    int& d = depth[ev.key_code];
    d += ev.is_down() ? 1 : -1;
    if (d < 0 || d > 1) return false;
  }
  return std::all_of(depth.begin(), depth.end(), [](const auto& kv) { return kv.second == 0; });
}

struct CorpusPreprocessResult {
  Corpus corpus;
  // per-log ledgers, parallel to corpus.logs()
  std::vector<CorrectionLedger> ledgers;

  std::size_t correction_count() const {
    std::size_t n = 0;
    for (const auto& l : ledgers) n += l.size();
    return n;
  }
};

inline CorpusPreprocessResult preprocess_corpus(
    const Corpus& corpus, const ShiftPairTable& table = ShiftPairTable::dubeolsik()) {
  CorpusPreprocessResult out;
  for (const auto& log : corpus.logs()) {
    auto r = preprocess(log, table);
    out.corpus.add(std::move(r.log));
    out.ledgers.push_back(std::move(r.ledger));
  }
  return out;
}

inline std::string ledger_record(const std::string& user, const TaskId& task,
                                 const CorrectionRecord& rec) {
  nlohmann::ordered_json j;
  j["kind"] = correction_kind_name(rec.kind);
  j["user"] = user;
  j["task"] = task.str();
  j["index"] = rec.event_index;
  j["before"] = rec.before;
  j["after"] = rec.after;
  j["removed"] = rec.removed;
  j["flagged"] = rec.flagged;
  return j.dump();
}

inline void write_ledger(const CorpusPreprocessResult& result, std::ostream& out) {
  const auto& logs = result.corpus.logs();
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (const auto& rec : result.ledgers[i]) {
      out << ledger_record(logs[i].user_id, logs[i].task, rec) << '\n';
    }
  }
}

}  // namespace keytrace
