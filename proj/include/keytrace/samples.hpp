#pragma once

#include <string>
#include <vector>

#include "feature_matrix.hpp"
#include "keylog.hpp"

namespace keytrace {

// One classification sample: every log of one user and one scenario whose
// question falls in the condition. Logs are borrowed from the corpus.
struct Sample {
  RowKey key;
  std::vector<const KeystrokeLog*> logs;
};

struct SampleSet {
  std::vector<Sample> samples;
  std::vector<std::string> warnings;
};

/// Rows come out ordered by user, then scenario. A (user, scenario) with no
/// logs in the condition is skipped and reported in `warnings`.
inline SampleSet build_samples(const Corpus& corpus, Condition condition) {
  SampleSet out;
  for (const auto& user : corpus.users()) {
    for (auto scenario : kScenarios) {
      Sample s{{user, condition, scenario}, {}};
      for (int q = 1; q <= kQuestionsPerScenario; ++q) {
        const TaskId task{scenario, q};
        if (!condition_includes(condition, task)) continue;
        if (const auto* log = corpus.find(user, task)) s.logs.push_back(log);
      }
      if (s.logs.empty()) {
        out.warnings.push_back("user '" + user + "' has no " + std::string(scenario_name(scenario)) +
                               " logs for condition " + std::string(condition_name(condition)) +
                               "; row omitted");
        continue;
      }
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace keytrace
