#pragma once

// Synthetic typists. Each user gets a profile drawn from fixed
// hyper-distributions; each (user, task) session types 100-120 words of
// Dubeolsik jamo soup. Scenario knobs scale long-pause rate, revision
// propensity and burst length so that composing, paraphrasing and
// transcribing differ in the expected directions:
//
//   bona fide    most long pauses, most revisions, shortest bursts
//   paraphrased  in between, with per-user variation in how "copied" it looks
//   transcribed  few long pauses, few revisions, long fluent bursts
//
// Optional defects reproduce the raw-log artifacts the preprocess module
// repairs; every injected defect maps to exactly one ledger record.
//
// Hyper-distributions (per user):
//   letter KHT mean        U(60, 150) ms, lognormal sigma U(0.18, 0.32)
//   inter-key interval     median U(110, 210) ms, sigma U(0.30, 0.45)
//   long pause rate        0.10 * lognormal(0, 0.25) per word boundary
//   long pause length      2000 + exponential(mean U(1500, 4000)) ms
//   revision rate          0.12 * lognormal(0, 0.25) per word
//   chunk pause rate       0.15 * lognormal(0, 0.25) per word
//   paraphrase style       U(0, 1)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "keylog.hpp"
#include "preprocess.hpp"
#include "rng.hpp"

namespace keytrace::synth {

enum class KeyClass : int { Letter = 0, Space, Shift, Deletion, Punctuation };
inline constexpr std::size_t kKeyClasses = 5;

struct LogNormal {
  double mu = 0.0;
  double sigma = 0.0;

  double mean() const { return std::exp(mu + sigma * sigma / 2.0); }
  double median() const { return std::exp(mu); }

  friend bool operator==(const LogNormal&, const LogNormal&) = default;
};

inline constexpr double kKhtMeanLoMs = 60.0;
inline constexpr double kKhtMeanHiMs = 150.0;

// log-scale spread of paraphrased sessions between composing and copying
inline constexpr double kParaphraseSpread = 1.7;

struct TypistProfile {
  std::string user_id;
  std::uint64_t seed = 0;
  std::array<LogNormal, kKeyClasses> kht{};
  LogNormal interval{};
  double word_gap_mult = 1.3;        // interval multiplier after a Space
  double long_pause_rate = 0.10;     // per word boundary, low cognitive load
  double long_pause_scale_ms = 2500; // mean excess over 2 s
  double high_cognition_mult = 1.4;  // long pauses and revisions on high-load prompts
  double revision_rate = 0.12;       // per word
  double chunk_pause_rate = 0.15;    // per word
  double glance_rate = 0.15;         // per word, paraphrased and transcribed only
  double paraphrase_style = 0.5;     // 0 composes freely, 1 stays close to the source

  bool valid() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    for (const auto& k : kht) {
      if (!(k.sigma > 0.0)) return false;
    }
    return interval.sigma > 0.0 && word_gap_mult > 0.0 && long_pause_scale_ms > 0.0 &&
           high_cognition_mult > 0.0 && prob(long_pause_rate) && prob(revision_rate) &&
           prob(chunk_pause_rate) && prob(glance_rate) && prob(paraphrase_style);
  }

  friend bool operator==(const TypistProfile&, const TypistProfile&) = default;
};

struct ScenarioEffect {
  double long_pause_mult = 1.0;
  double revision_mult = 1.0;
  double burst_length_mult = 1.0;  // divides the chunk-pause rate
  double pace_mult = 1.0;          // scales inter-key intervals
  double glance_mult = 0.0;        // scales the profile's glance rate
  bool cognition_sensitive = true;

  friend bool operator==(const ScenarioEffect&, const ScenarioEffect&) = default;
};

struct ScenarioKnobs {
  std::array<ScenarioEffect, 3> effect{
      ScenarioEffect{1.0, 1.0, 1.0, 1.0, 0.0, true},
      ScenarioEffect{0.35, 0.4, 1.5, 0.82, 0.5, true},
      ScenarioEffect{0.1, 0.12, 2.5, 0.68, 1.6, false},
  };

  const ScenarioEffect& operator[](Scenario s) const { return effect[static_cast<std::size_t>(s)]; }
  ScenarioEffect& operator[](Scenario s) { return effect[static_cast<std::size_t>(s)]; }

  friend bool operator==(const ScenarioKnobs&, const ScenarioKnobs&) = default;
};

inline nlohmann::ordered_json knobs_to_json(const ScenarioKnobs& k) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (auto s : kScenarios) {
    const auto& e = k[s];
    j[std::string(scenario_name(s))] = {{"long_pause_mult", e.long_pause_mult},
                                        {"revision_mult", e.revision_mult},
                                        {"burst_length_mult", e.burst_length_mult},
                                        {"pace_mult", e.pace_mult},
                                        {"glance_mult", e.glance_mult},
                                        {"cognition_sensitive", e.cognition_sensitive}};
  }
  return j;
}

/// Missing scenarios or fields keep their defaults.
inline ScenarioKnobs knobs_from_json(const nlohmann::json& j) {
  ScenarioKnobs k;
  for (auto s : kScenarios) {
    const auto name = std::string(scenario_name(s));
    if (!j.contains(name)) continue;
    const auto& o = j.at(name);
    auto& e = k[s];
    e.long_pause_mult = o.value("long_pause_mult", e.long_pause_mult);
    e.revision_mult = o.value("revision_mult", e.revision_mult);
    e.burst_length_mult = o.value("burst_length_mult", e.burst_length_mult);
    e.pace_mult = o.value("pace_mult", e.pace_mult);
    e.glance_mult = o.value("glance_mult", e.glance_mult);
    e.cognition_sensitive = o.value("cognition_sensitive", e.cognition_sensitive);
    if (!(e.long_pause_mult >= 0 && e.revision_mult >= 0 && e.burst_length_mult > 0 &&
          e.pace_mult > 0 && e.glance_mult >= 0)) {
      throw Error("scenario knobs for " + name + " out of range");
    }
  }
  return k;
}

struct DefectOptions {
  bool enabled = false;
  double capslock_prob = 0.5;   // per session, one CapsLock/Unidentified block
  double repeat_rate = 0.004;   // per letter stroke
  double mislabel_rate = 0.006; // per Shift-pair jamo stroke
};

// ---------------------------------------------------------------------------
// Layout

struct Jamo {
  std::string_view value;
  std::string_view code;
  bool shifted;
};

namespace layout {

// basic consonants in rough frequency order
inline constexpr std::array<Jamo, 14> kInitials{{
    {"ㅇ", "KeyD", false}, {"ㄱ", "KeyR", false}, {"ㄴ", "KeyS", false}, {"ㄷ", "KeyE", false},
    {"ㅅ", "KeyT", false}, {"ㅈ", "KeyW", false}, {"ㄹ", "KeyF", false}, {"ㅁ", "KeyA", false},
    {"ㅎ", "KeyG", false}, {"ㅂ", "KeyQ", false}, {"ㅊ", "KeyC", false}, {"ㅌ", "KeyX", false},
    {"ㅍ", "KeyV", false}, {"ㅋ", "KeyZ", false},
}};

inline constexpr std::array<Jamo, 5> kTense{{
    {"ㄲ", "KeyR", true}, {"ㄸ", "KeyE", true}, {"ㅃ", "KeyQ", true},
    {"ㅆ", "KeyT", true}, {"ㅉ", "KeyW", true},
}};

inline constexpr std::array<Jamo, 12> kVowels{{
    {"ㅏ", "KeyK", false}, {"ㅣ", "KeyL", false}, {"ㅓ", "KeyJ", false}, {"ㅡ", "KeyM", false},
    {"ㅗ", "KeyH", false}, {"ㅜ", "KeyN", false}, {"ㅐ", "KeyO", false}, {"ㅔ", "KeyP", false},
    {"ㅕ", "KeyU", false}, {"ㅛ", "KeyY", false}, {"ㅠ", "KeyB", false}, {"ㅑ", "KeyI", false},
}};

inline constexpr std::array<Jamo, 2> kShiftedVowels{{{"ㅒ", "KeyO", true}, {"ㅖ", "KeyP", true}}};

inline constexpr std::array<Jamo, 7> kFinals{{
    {"ㄴ", "KeyS", false}, {"ㄹ", "KeyF", false}, {"ㅇ", "KeyD", false}, {"ㄱ", "KeyR", false},
    {"ㅁ", "KeyA", false}, {"ㅅ", "KeyT", false}, {"ㅂ", "KeyQ", false},
}};

inline constexpr Jamo kSpace{" ", "Space", false};
inline constexpr Jamo kPeriod{".", "Period", false};
inline constexpr Jamo kQuestion{"?", "Slash", true};
inline constexpr Jamo kBackspace{"Backspace", "Backspace", false};

}  // namespace layout

// Zipf-like index: weight 1/(i+1)
inline std::size_t zipf_index(Rng& rng, std::size_t n) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += 1.0 / static_cast<double>(i + 1);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < n; ++i) {
    u -= 1.0 / static_cast<double>(i + 1);
    if (u < 0.0) return i;
  }
  return n - 1;
}

inline std::vector<Jamo> random_word(Rng& rng) {
  std::vector<Jamo> w;
  const auto syllables = rng.between(1, 3);
  for (std::int64_t s = 0; s < syllables; ++s) {
    w.push_back(rng.bernoulli(0.06) ? layout::kTense[rng.below(layout::kTense.size())]
                                    : layout::kInitials[zipf_index(rng, layout::kInitials.size())]);
    w.push_back(rng.bernoulli(0.03) ? layout::kShiftedVowels[rng.below(2)]
                                    : layout::kVowels[zipf_index(rng, layout::kVowels.size())]);
    if (rng.bernoulli(0.35)) w.push_back(layout::kFinals[zipf_index(rng, layout::kFinals.size())]);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Profiles

inline std::string user_name(int index) {
  std::string digits = std::to_string(index + 1);
  if (digits.size() < 3) digits.insert(0, 3 - digits.size(), '0');
  return "u" + digits;
}

inline TypistProfile generate_profile(std::uint64_t seed, int user_index) {
  TypistProfile p;
  p.user_id = user_name(user_index);
  p.seed = mix_seed(seed, static_cast<std::uint64_t>(user_index));
  Rng rng(p.seed);

  auto with_mean = [](double mean, double sigma) {
    return LogNormal{std::log(mean) - sigma * sigma / 2.0, sigma};
  };
  const double letter_mean = rng.uniform(kKhtMeanLoMs, kKhtMeanHiMs);
  const double letter_sigma = rng.uniform(0.18, 0.32);
  p.kht[static_cast<int>(KeyClass::Letter)] = with_mean(letter_mean, letter_sigma);
  p.kht[static_cast<int>(KeyClass::Space)] = with_mean(letter_mean * rng.uniform(0.9, 1.3), letter_sigma);
  p.kht[static_cast<int>(KeyClass::Shift)] = with_mean(letter_mean * rng.uniform(1.2, 1.8), letter_sigma);
  p.kht[static_cast<int>(KeyClass::Deletion)] = with_mean(letter_mean * rng.uniform(0.8, 1.1), letter_sigma);
  p.kht[static_cast<int>(KeyClass::Punctuation)] = with_mean(letter_mean * rng.uniform(0.9, 1.2), letter_sigma);

  p.interval = {std::log(rng.uniform(125.0, 185.0)), rng.uniform(0.30, 0.45)};
  p.word_gap_mult = rng.uniform(1.1, 1.6);
  p.long_pause_rate = std::min(0.5, 0.10 * rng.lognormal(0.0, 0.25));
  p.long_pause_scale_ms = rng.uniform(1500.0, 4000.0);
  p.high_cognition_mult = rng.uniform(1.25, 1.6);
  p.revision_rate = std::min(0.6, 0.12 * rng.lognormal(0.0, 0.25));
  p.chunk_pause_rate = std::min(0.6, 0.15 * rng.lognormal(0.0, 0.25));
  p.glance_rate = rng.uniform(0.08, 0.2);
  p.paraphrase_style = rng.uniform();
  return p;
}

// ---------------------------------------------------------------------------
// Sessions

enum class EventTag { Normal, Repeat, Unidentified, Mislabeled };

struct SessionTrace {
  KeystrokeLog log;                            // raw, defects included
  KeystrokeLog clean;                          // what preprocess should recover
  std::vector<std::size_t> mislabeled_up_indices;  // indices into log.events
  std::size_t expected_ledger_size = 0;
  int word_target = 0;
};

namespace detail {

struct Timed {
  std::int64_t time;
  std::uint64_t seq;
  KeyEvent event;
  EventTag tag = EventTag::Normal;
  int stroke = -1;  // owning letter stroke, for defect injection
  std::string true_value{};  // set on mislabeled Ups
};

class Typist {
 public:
  Typist(const TypistProfile& p, Rng& rng, double pace) : p_(p), rng_(rng), pace_(pace) {}

  std::int64_t now() const { return t_; }
  void start_at(std::int64_t t) { t_ = t; }

  double interval(double mult = 1.0) {
    const double v = rng_.lognormal(p_.interval.mu, p_.interval.sigma) * pace_ * mult;
    return std::clamp(v, 40.0, 1500.0);
  }

  void press(const Jamo& j, KeyClass cls, double gap_ms) {
    const auto gap = std::max<std::int64_t>(40, std::llround(gap_ms));
    t_ += gap;
    const auto hold = hold_for(cls);
    const auto stroke = strokes_++;
    if (j.shifted) {
      const double lead = std::min(rng_.uniform(30.0, 80.0), 0.6 * static_cast<double>(gap));
      const auto shift_down = t_ - std::llround(lead);
      emit(shift_down, {"Shift", "ShiftLeft", KeyAction::Down, 0}, -1);
      const auto shift_up = t_ + hold + std::llround(rng_.uniform(10.0, 50.0));
      emit(t_, {std::string(j.value), std::string(j.code), KeyAction::Down, 0}, stroke);
      emit(t_ + hold, {std::string(j.value), std::string(j.code), KeyAction::Up, 0}, stroke);
      emit(shift_up, {"Shift", "ShiftLeft", KeyAction::Up, 0}, -1);
    } else {
      emit(t_, {std::string(j.value), std::string(j.code), KeyAction::Down, 0},
           cls == KeyClass::Letter ? stroke : -1);
      emit(t_ + hold, {std::string(j.value), std::string(j.code), KeyAction::Up, 0},
           cls == KeyClass::Letter ? stroke : -1);
    }
  }

  std::vector<Timed> take() { return std::move(events_); }

 private:
  std::int64_t hold_for(KeyClass cls) {
    const auto& d = p_.kht[static_cast<std::size_t>(cls)];
    return std::clamp<std::int64_t>(std::llround(rng_.lognormal(d.mu, d.sigma)), 15, 600);
  }

  // A Down closes any still-open earlier press of the same code.
  void emit(std::int64_t time, KeyEvent ev, int stroke) {
    ev.timestamp_ms = time;
    if (ev.is_down()) {
      if (auto it = last_up_.find(ev.key_code); it != last_up_.end()) {
        auto& up = events_[it->second];
        if (up.time >= time) up.time = time - 1;
      }
    } else {
      last_up_[ev.key_code] = events_.size();
    }
    events_.push_back({time, seq_++, std::move(ev), EventTag::Normal, stroke});
  }

  const TypistProfile& p_;
  Rng& rng_;
  double pace_;
  std::int64_t t_ = 0;
  std::uint64_t seq_ = 0;
  int strokes_ = 0;
  std::vector<Timed> events_;
  std::map<std::string, std::size_t> last_up_;
};

inline void sort_timed(std::vector<Timed>& ev) {
  std::stable_sort(ev.begin(), ev.end(), [](const Timed& a, const Timed& b) {
    return a.time != b.time ? a.time < b.time : a.seq < b.seq;
  });
}

inline void finalize_times(std::vector<Timed>& ev) {
  for (auto& e : ev) e.event.timestamp_ms = e.time;
}

}  // namespace detail

inline std::uint64_t task_stream(const TaskId& task) {
  return static_cast<std::uint64_t>(static_cast<int>(task.scenario) * 16 + task.question);
}

inline SessionTrace generate_session_trace(const TypistProfile& profile, const TaskId& task,
                                           const ScenarioKnobs& knobs = {},
                                           const DefectOptions& defects = {}) {
  Rng rng(mix_seed(profile.seed, task_stream(task)));
  const auto& fx = knobs[task.scenario];
  const bool high = task_cognition(task).level == CognitiveLevel::High;
  const double cog = fx.cognition_sensitive && high ? profile.high_cognition_mult : 1.0;

  // paraphrasers differ in how far they stray from the source text
  double style = 1.0;
  if (task.scenario == Scenario::Paraphrased) style = std::exp(kParaphraseSpread * (0.5 - profile.paraphrase_style));

  const double long_rate = std::min(0.9, profile.long_pause_rate * fx.long_pause_mult * cog * style);
  const double sentence_rate = std::min(0.95, 3.0 * long_rate);
  const double revision_rate = std::min(0.9, profile.revision_rate * fx.revision_mult * cog * style);
  const double chunk_rate = std::min(0.9, profile.chunk_pause_rate / fx.burst_length_mult);
  const double glance_rate = std::min(0.9, profile.glance_rate * fx.glance_mult);
  const bool reading_source = task.scenario == Scenario::Transcribed;

  SessionTrace out;
  out.word_target = static_cast<int>(rng.between(100, 120));

  detail::Typist typist(profile, rng, fx.pace_mult);
  typist.start_at(rng.between(500, 4000));

  int sentence_left = static_cast<int>(rng.between(8, 15));
  bool sentence_start = true;
  bool first = true;
  for (int w = 0; w < out.word_target; ++w) {
    const auto word = random_word(rng);

    double gap = first ? 0.0 : typist.interval(profile.word_gap_mult);
    const double lp = sentence_start ? sentence_rate : long_rate;
    if (!first && rng.bernoulli(lp)) {
      gap += 2000.0 + rng.exponential(profile.long_pause_scale_ms);
    } else if (!first && rng.bernoulli(glance_rate)) {
      gap += reading_source ? rng.uniform(300.0, 900.0) : rng.uniform(400.0, 1600.0);
    } else if (!first && rng.bernoulli(chunk_rate)) {
      gap += rng.uniform(400.0, 1600.0);
    }
    first = false;

    // revision point inside this word
    std::size_t revise_at = word.size() + 1;
    if (rng.bernoulli(revision_rate)) revise_at = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(word.size())));

    for (std::size_t i = 0; i < word.size(); ++i) {
      typist.press(word[i], KeyClass::Letter, i == 0 ? gap : typist.interval());
      if (i + 1 == revise_at) {
        const auto n = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(i + 1)));
        double pre = rng.uniform(300.0, 1500.0);
        for (std::size_t b = 0; b < n; ++b) {
          typist.press(layout::kBackspace, KeyClass::Deletion, b == 0 ? pre : typist.interval(0.7));
        }
        // retype the deleted tail
        for (std::size_t r = i + 1 - n; r <= i; ++r) {
          typist.press(word[r], KeyClass::Letter, r == i + 1 - n ? typist.interval(1.5) : typist.interval());
        }
      }
    }

    if (--sentence_left == 0 || w + 1 == out.word_target) {
      const bool question = rng.bernoulli(0.15);
      typist.press(question ? layout::kQuestion : layout::kPeriod, KeyClass::Punctuation,
                   typist.interval());
      sentence_left = static_cast<int>(rng.between(8, 15));
      sentence_start = true;
    } else {
      sentence_start = false;
    }
    if (w + 1 < out.word_target) typist.press(layout::kSpace, KeyClass::Space, typist.interval());
  }

  auto events = typist.take();
  detail::sort_timed(events);
  detail::finalize_times(events);

  out.clean = {profile.user_id, task, {}};
  std::vector<detail::Timed> raw = events;

  if (defects.enabled) {
    Rng drng(mix_seed(profile.seed, task_stream(task) + 0xDEF));
    const auto table = ShiftPairTable::dubeolsik();
    std::map<int, std::size_t> down_of, up_of;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i].stroke < 0) continue;
      (raw[i].event.is_down() ? down_of : up_of)[raw[i].stroke] = i;
    }
    std::vector<detail::Timed> extra;
    std::uint64_t seq = raw.empty() ? 0 : raw.size() + 1000;
    for (const auto& [stroke, di] : down_of) {
      const auto ui = up_of.at(stroke);
      const auto& down = raw[di];
      const auto hold = raw[ui].time - down.time;
      if (hold >= 40 && drng.bernoulli(defects.repeat_rate)) {
        const auto k = drng.between(1, std::min<std::int64_t>(3, hold / 12));
        for (std::int64_t r = 1; r <= k; ++r) {
          auto e = down;
          e.time = down.time + r * hold / (k + 1);
          e.event.timestamp_ms = e.time;
          e.tag = EventTag::Repeat;
          e.seq = seq++;
          extra.push_back(std::move(e));
        }
        out.expected_ledger_size += 1;
      } else if (auto partner = table.partner(down.event.key_value);
                 partner && drng.bernoulli(defects.mislabel_rate)) {
        raw[ui].true_value = raw[ui].event.key_value;
        raw[ui].event.key_value = *partner;
        raw[ui].tag = EventTag::Mislabeled;
        out.expected_ledger_size += 1;
      }
    }
    if (drng.bernoulli(defects.capslock_prob)) {
      // find a quiet gap of at least 10 ms
      std::vector<std::size_t> gaps;
      for (std::size_t i = 1; i < raw.size(); ++i) {
        if (raw[i].time - raw[i - 1].time >= 10) gaps.push_back(i);
      }
      if (!gaps.empty()) {
        const auto at = gaps[drng.below(gaps.size())];
        const auto t0 = raw[at - 1].time;
        const std::array<KeyEvent, 4> block{{{"CapsLock", "CapsLock", KeyAction::Down, 0},
                                             {"Unidentified", "CapsLock", KeyAction::Down, 0},
                                             {"Unidentified", "CapsLock", KeyAction::Up, 0},
                                             {"CapsLock", "CapsLock", KeyAction::Up, 0}}};
        for (std::size_t b = 0; b < block.size(); ++b) {
          detail::Timed e{t0 + 1 + static_cast<std::int64_t>(b) * 2, seq++, block[b],
                          block[b].key_value == "Unidentified" ? EventTag::Unidentified
                                                               : EventTag::Normal,
                          -1, {}};
          e.event.timestamp_ms = e.time;
          extra.push_back(std::move(e));
        }
        out.expected_ledger_size += 2;
      }
    }
    // extras sort after same-time originals, except within their own block
    raw.insert(raw.end(), extra.begin(), extra.end());
    detail::sort_timed(raw);
  }

  out.log = {profile.user_id, task, {}};
  out.log.events.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.log.events.push_back(raw[i].event);
    if (raw[i].tag == EventTag::Mislabeled) out.mislabeled_up_indices.push_back(i);
    if (raw[i].tag == EventTag::Repeat || raw[i].tag == EventTag::Unidentified) continue;
    auto ev = raw[i].event;
    if (raw[i].tag == EventTag::Mislabeled) ev.key_value = raw[i].true_value;
    out.clean.events.push_back(std::move(ev));
  }
  return out;
}

inline KeystrokeLog generate_session(const TypistProfile& profile, const TaskId& task,
                                     const ScenarioKnobs& knobs = {},
                                     const DefectOptions& defects = {}) {
  return generate_session_trace(profile, task, knobs, defects).log;
}

/// n_users x 18 logs, users "u001".., tasks in scenario-question order.
inline Corpus generate_corpus(int n_users, std::uint64_t seed, const ScenarioKnobs& knobs = {},
                              const DefectOptions& defects = {}) {
  if (n_users < 2) throw Error("synthetic corpus needs at least 2 users");
  Corpus c;
  for (int u = 0; u < n_users; ++u) {
    const auto profile = generate_profile(seed, u);
    for (const auto& task : all_tasks()) c.add(generate_session(profile, task, knobs, defects));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Text

/// Replays printable Downs, applying Backspace; Shift and other named keys
/// produce nothing.
inline std::string reconstruct_text(const KeystrokeLog& log) {
  std::vector<std::string> chars;
  for (const auto& ev : log.events) {
    if (!ev.is_down()) continue;
    if (is_deletion_key(ev)) {
      if (!chars.empty()) chars.pop_back();
      continue;
    }
    if (ev.key_value.size() > 1 && ev.key_value.front() >= 'A' && ev.key_value.front() <= 'Z') {
      continue;  // named key such as Shift or CapsLock
    }
    chars.push_back(ev.key_value);
  }
  std::string s;
  for (const auto& c : chars) s += c;
  return s;
}

inline std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool ws = c == ' ' || c == '\n' || c == '\t' || c == '\r';
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

}  // namespace keytrace::synth
