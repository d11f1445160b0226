#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <keytrace/keylog.hpp>
#include <keytrace/manifest.hpp>
#include <keytrace/preprocess.hpp>
#include <keytrace/rng.hpp>

namespace kt_test {

using keytrace::KeyAction;
using keytrace::KeyEvent;
using keytrace::KeystrokeLog;

inline KeyEvent dn(std::string key, std::string code, std::int64_t t) {
  return {std::move(key), std::move(code), KeyAction::Down, t};
}

inline KeyEvent up(std::string key, std::string code, std::int64_t t) {
  return {std::move(key), std::move(code), KeyAction::Up, t};
}

inline KeystrokeLog make_log(std::vector<KeyEvent> events, std::string user = "u1",
                             keytrace::TaskId task = {}) {
  return {std::move(user), task, std::move(events)};
}

// Down/Up pairs with the given Down-to-Down gaps and a fixed hold.
inline KeystrokeLog typed(const std::vector<std::pair<std::string, std::string>>& keys,
                          const std::vector<std::int64_t>& gaps, std::int64_t hold = 30,
                          std::int64_t t0 = 1000) {
  std::vector<std::pair<std::int64_t, KeyEvent>> timed;
  std::int64_t t = t0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i > 0) t += gaps.at(i - 1);
    timed.push_back({t, dn(keys[i].first, keys[i].second, t)});
    timed.push_back({t + hold, up(keys[i].first, keys[i].second, t + hold)});
  }
  std::stable_sort(timed.begin(), timed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  KeystrokeLog log = make_log({});
  for (auto& [tt, e] : timed) log.events.push_back(std::move(e));
  return log;
}

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(KEYTRACE_FIXTURE_DIR) / name;
}

inline KeystrokeLog fixture_log(const std::string& name) {
  auto corpus = keytrace::parse_log_stream(keytrace::read_file(fixture(name)));
  return corpus.logs().at(0);
}

// Stack-per-code pairing check, written independently of the library.
inline bool pairing_ok(const KeystrokeLog& log) {
  std::map<std::string, std::vector<std::int64_t>> open;
  for (const auto& e : log.events) {
    auto& stack = open[e.key_code];
    if (e.is_down()) {
      if (!stack.empty()) return false;
      stack.push_back(e.timestamp_ms);
    } else {
      if (stack.empty()) return false;
      stack.pop_back();
    }
  }
  for (const auto& [code, stack] : open) {
    if (!stack.empty()) return false;
  }
  return true;
}

// Random log with assorted defects: dropped events, auto-repeat runs,
// CapsLock/Unidentified blocks, stray Ups, Shift-variant mislabels.
inline KeystrokeLog fuzz_log(keytrace::Rng& rng) {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"ㄱ", "KeyR"}, {"ㄲ", "KeyR"},  {"ㅂ", "KeyQ"}, {"ㅃ", "KeyQ"},       {"ㅏ", "KeyK"},
      {"ㅔ", "KeyP"}, {"ㅖ", "KeyP"},  {"a", "KeyA"}, {"A", "KeyA"},        {" ", "Space"},
      {"Shift", "ShiftLeft"}, {"Backspace", "Backspace"}, {".", "Period"}, {"ArrowLeft", "ArrowLeft"}};
  const auto table = keytrace::ShiftPairTable::dubeolsik();
  std::vector<KeyEvent> ev;
  std::int64_t t = rng.between(0, 100);
  const auto strokes = rng.between(0, 40);
  for (std::int64_t s = 0; s < strokes; ++s) {
    const auto& [key, code] = keys[rng.below(keys.size())];
    t += rng.between(0, 200);
    const auto u = rng.uniform();
    if (u < 0.05) {
      ev.push_back(dn("CapsLock", "CapsLock", t));
      ev.push_back(dn("Unidentified", "CapsLock", t + 1));
      ev.push_back(up("Unidentified", "CapsLock", t + 2));
      ev.push_back(up("CapsLock", "CapsLock", t + 3));
      t += 3;
      continue;
    }
    if (u < 0.08) {
      ev.push_back(dn("Unidentified", "Unidentified", t));
      continue;
    }
    if (u < 0.11) {
      ev.push_back(up(key, code, t));
      continue;
    }
    ev.push_back(dn(key, code, t));
    const auto repeats = rng.uniform() < 0.1 ? rng.between(1, 5) : 0;
    for (std::int64_t r = 0; r < repeats; ++r) ev.push_back(dn(key, code, t += rng.between(0, 30)));
    std::string up_key = key;
    if (auto p = table.partner(key); p && rng.uniform() < 0.15) up_key = *p;
    if (rng.uniform() < 0.9) ev.push_back(up(up_key, code, t += rng.between(0, 120)));
  }
  // interleave by time, then drop a few events at random
  std::stable_sort(ev.begin(), ev.end(),
                   [](const KeyEvent& a, const KeyEvent& b) { return a.timestamp_ms < b.timestamp_ms; });
  std::vector<KeyEvent> out;
  for (auto& e : ev) {
    if (rng.uniform() < 0.03) continue;
    out.push_back(std::move(e));
  }
  return make_log(std::move(out));
}

}  // namespace kt_test
