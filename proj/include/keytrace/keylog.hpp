#pragma once

// Data model and the canonical JSON Lines event stream.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace keytrace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& what)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

enum class Scenario : int { BonaFide = 0, Paraphrased = 1, Transcribed = 2 };

inline constexpr std::array<Scenario, 3> kScenarios{Scenario::BonaFide, Scenario::Paraphrased,
                                                    Scenario::Transcribed};
inline constexpr int kNumClasses = 3;
inline constexpr int kQuestionsPerScenario = 6;

inline std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::BonaFide: return "BonaFide";
    case Scenario::Paraphrased: return "Paraphrased";
    case Scenario::Transcribed: return "Transcribed";
  }
  return "?";
}

inline int class_index(Scenario s) { return static_cast<int>(s); }

inline Scenario scenario_from_index(int i) {
  if (i < 0 || i >= kNumClasses) throw Error("scenario index out of range: " + std::to_string(i));
  return static_cast<Scenario>(i);
}

inline std::optional<Scenario> parse_scenario(std::string_view s) {
  for (auto sc : kScenarios) {
    if (s == scenario_name(sc)) return sc;
  }
  return std::nullopt;
}

enum class KeyAction { Down, Up };

inline std::string_view action_name(KeyAction a) { return a == KeyAction::Down ? "down" : "up"; }

struct KeyEvent {
  std::string key_value;
  std::string key_code;
  KeyAction action = KeyAction::Down;
  std::int64_t timestamp_ms = 0;

  bool is_down() const { return action == KeyAction::Down; }
  bool is_up() const { return action == KeyAction::Up; }

  friend bool operator==(const KeyEvent&, const KeyEvent&) = default;
};

/// Scenario x question identifier, rendered "x.y".
struct TaskId {
  Scenario scenario = Scenario::BonaFide;
  int question = 1;

  std::string str() const {
    return std::to_string(static_cast<int>(scenario)) + "." + std::to_string(question);
  }

  static std::optional<TaskId> try_parse(std::string_view s) {
    if (s.size() != 3 || s[1] != '.') return std::nullopt;
    const int x = s[0] - '0';
    const int y = s[2] - '0';
    if (x < 0 || x > 2 || y < 1 || y > kQuestionsPerScenario) return std::nullopt;
    return TaskId{static_cast<Scenario>(x), y};
  }

  static TaskId parse(std::string_view s) {
    if (auto t = try_parse(s)) return *t;
    throw Error("invalid task id '" + std::string(s) + "' (expected x.y, x in 0..2, y in 1..6)");
  }

  friend auto operator<=>(const TaskId&, const TaskId&) = default;
};

inline std::vector<TaskId> all_tasks() {
  std::vector<TaskId> out;
  for (auto s : kScenarios) {
    for (int q = 1; q <= kQuestionsPerScenario; ++q) out.push_back({s, q});
  }
  return out;
}

enum class CognitiveProcess { Remember, Understand, Apply, Analyze, Evaluate, Create };
enum class CognitiveLevel { Low, High };

struct CognitiveTag {
  CognitiveProcess process;
  CognitiveLevel level;

  friend bool operator==(const CognitiveTag&, const CognitiveTag&) = default;
};

// Question order follows the taxonomy; questions 1-3 are low load.
inline CognitiveTag task_cognition(const TaskId& task) {
  const auto process = static_cast<CognitiveProcess>(task.question - 1);
  const auto level = task.question <= 3 ? CognitiveLevel::Low : CognitiveLevel::High;
  return {process, level};
}

struct KeystrokeLog {
  std::string user_id;
  TaskId task;
  std::vector<KeyEvent> events;

  friend bool operator==(const KeystrokeLog&, const KeystrokeLog&) = default;
};

// Logs keyed uniquely by (user, task); insertion order is kept.
class Corpus {
 public:
  Corpus() = default;

  void add(KeystrokeLog log) {
    auto key = std::make_pair(log.user_id, log.task);
    if (index_.contains(key)) {
      throw Error("duplicate log for user '" + log.user_id + "' task " + log.task.str());
    }
    index_.emplace(std::move(key), logs_.size());
    users_.insert(log.user_id);
    logs_.push_back(std::move(log));
  }

  const std::vector<KeystrokeLog>& logs() const { return logs_; }
  const std::set<std::string>& users() const { return users_; }
  std::size_t size() const { return logs_.size(); }
  bool empty() const { return logs_.empty(); }

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& l : logs_) n += l.events.size();
    return n;
  }

  const KeystrokeLog* find(const std::string& user, const TaskId& task) const {
    auto it = index_.find({user, task});
    return it == index_.end() ? nullptr : &logs_[it->second];
  }

  friend bool operator==(const Corpus& a, const Corpus& b) { return a.logs_ == b.logs_; }

 private:
  std::vector<KeystrokeLog> logs_;
  std::set<std::string> users_;
  std::map<std::pair<std::string, TaskId>, std::size_t> index_;
};

namespace detail {

inline std::int64_t round_half_up_ms(double t) {
  return static_cast<std::int64_t>(std::floor(t + 0.5));
}

inline const nlohmann::json& require_field(const nlohmann::json& rec, std::size_t line,
                                           const char* name) {
  auto it = rec.find(name);
  if (it == rec.end()) throw ParseError(line, name, "missing field");
  return *it;
}

inline std::string require_string(const nlohmann::json& rec, std::size_t line, const char* name) {
  const auto& v = require_field(rec, line, name);
  if (!v.is_string()) throw ParseError(line, name, "expected string");
  return v.get<std::string>();
}

}  // namespace detail

/// Reads the canonical event stream: one JSON object per line with exactly
/// the fields user, task, key, code, action, t. Blank lines are ignored.
/// Throws ParseError naming the offending line and field.
inline Corpus parse_log_stream(std::istream& in) {
  static const std::set<std::string> kFields{"user", "task", "key", "code", "action", "t"};

  std::vector<KeystrokeLog> logs;
  std::map<std::pair<std::string, TaskId>, std::size_t> where;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line, "<record>", std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw ParseError(line, "<record>", "expected a JSON object");
    for (const auto& [name, value] : rec.items()) {
      if (!kFields.contains(name)) throw ParseError(line, name, "unknown field");
    }

    auto user = detail::require_string(rec, line, "user");
    const auto task_text = detail::require_string(rec, line, "task");
    auto task = TaskId::try_parse(task_text);
    if (!task) throw ParseError(line, "task", "invalid task id '" + task_text + "'");

    KeyEvent ev;
    ev.key_value = detail::require_string(rec, line, "key");
    ev.key_code = detail::require_string(rec, line, "code");
    if (ev.key_code.empty()) throw ParseError(line, "code", "empty key code");

    const auto action = detail::require_string(rec, line, "action");
    if (action == "down") {
      ev.action = KeyAction::Down;
    } else if (action == "up") {
      ev.action = KeyAction::Up;
    } else {
      throw ParseError(line, "action", "unknown action '" + action + "'");
    }

    const auto& t = detail::require_field(rec, line, "t");
    if (t.is_number_integer()) {
      ev.timestamp_ms = t.get<std::int64_t>();
    } else if (t.is_number_float()) {
      ev.timestamp_ms = detail::round_half_up_ms(t.get<double>());
    } else {
      throw ParseError(line, "t", "expected a number");
    }
    if (ev.timestamp_ms < 0) throw ParseError(line, "t", "negative timestamp");

    auto key = std::make_pair(user, *task);
    auto it = where.find(key);
    if (it == where.end()) {
      it = where.emplace(key, logs.size()).first;
      logs.push_back(KeystrokeLog{std::move(user), *task, {}});
    }
    auto& events = logs[it->second].events;
    if (!events.empty()) {
      const auto& prev = events.back();
      if (ev.timestamp_ms < prev.timestamp_ms) {
        throw ParseError(line, "t", "timestamp decreases within user/task");
      }
      if (ev == prev) throw ParseError(line, "<record>", "duplicate event");
    }
    events.push_back(std::move(ev));
  }

  Corpus corpus;
  for (auto& l : logs) corpus.add(std::move(l));
  return corpus;
}

inline Corpus parse_log_stream(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_log_stream(in);
}

inline std::string event_record(const std::string& user, const TaskId& task, const KeyEvent& ev) {
  nlohmann::ordered_json rec;
  rec["user"] = user;
  rec["task"] = task.str();
  rec["key"] = ev.key_value;
  rec["code"] = ev.key_code;
  rec["action"] = action_name(ev.action);
  rec["t"] = ev.timestamp_ms;
  return rec.dump();
}

inline void write_log_stream(const Corpus& corpus, std::ostream& out) {
  for (const auto& log : corpus.logs()) {
    for (const auto& ev : log.events) out << event_record(log.user_id, log.task, ev) << '\n';
  }
}

inline std::string write_log_stream(const Corpus& corpus) {
  std::ostringstream out;
  write_log_stream(corpus, out);
  return out.str();
}

}  // namespace keytrace
