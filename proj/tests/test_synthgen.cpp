#include <gtest/gtest.h>

#include <set>

#include <keytrace/preprocess.hpp>
#include <keytrace/rhythmic.hpp>
#include <keytrace/stats.hpp>
#include <keytrace/synthgen.hpp>

#include "support.hpp"

using namespace keytrace;

TEST(Profiles, DeterministicPerSeedAndIndex) {
  EXPECT_EQ(synth::generate_profile(5, 3), synth::generate_profile(5, 3));
  EXPECT_NE(synth::generate_profile(5, 3), synth::generate_profile(5, 4));
  EXPECT_NE(synth::generate_profile(5, 3), synth::generate_profile(6, 3));
  std::set<std::string> ids;
  for (int i = 0; i < 69; ++i) ids.insert(synth::generate_profile(1, i).user_id);
  EXPECT_EQ(ids.size(), 69u);
  EXPECT_EQ(synth::user_name(0), "u001");
  EXPECT_EQ(synth::user_name(68), "u069");
}

TEST(Profiles, KhtMeansSpanTheDocumentedRange) {
  double lo = 1e9, hi = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = synth::generate_profile(11, i);
    ASSERT_TRUE(p.valid());
    const double m = p.kht[0].mean();
    EXPECT_GE(m, synth::kKhtMeanLoMs - 1e-6);
    EXPECT_LE(m, synth::kKhtMeanHiMs + 1e-6);
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  EXPECT_LT(lo, 65);
  EXPECT_GT(hi, 145);
}

TEST(Sessions, CleanWithoutDefects) {
  const auto p = synth::generate_profile(2, 0);
  for (const auto& task : all_tasks()) {
    const auto trace = synth::generate_session_trace(p, task);
    EXPECT_TRUE(kt_test::pairing_ok(trace.log)) << task.str();
    EXPECT_EQ(trace.log, trace.clean);
    EXPECT_EQ(trace.expected_ledger_size, 0u);
    const auto r = preprocess(trace.log);
    EXPECT_TRUE(r.ledger.empty()) << task.str();
    EXPECT_EQ(r.log, trace.log);
  }
}

TEST(Sessions, WordCountMatchesTarget) {
  for (int u = 0; u < 4; ++u) {
    const auto p = synth::generate_profile(3, u);
    for (const auto& task : all_tasks()) {
      const auto trace = synth::generate_session_trace(p, task);
      EXPECT_GE(trace.word_target, 100);
      EXPECT_LE(trace.word_target, 120);
      EXPECT_EQ(synth::word_count(synth::reconstruct_text(trace.log)), static_cast<std::size_t>(trace.word_target))
          << task.str();
    }
  }
}

TEST(Sessions, TranscribedHasFewerLongPauses) {
  std::size_t bonafide = 0, transcribed = 0;
  for (int i = 0; i < 100; ++i) {
    const auto p = synth::generate_profile(9, i);
    const auto b = extract_binned_pauses(synth::generate_session(p, {Scenario::BonaFide, 1}));
    const auto t = extract_binned_pauses(synth::generate_session(p, {Scenario::Transcribed, 1}));
    bonafide += b[kPauseBins - 1].size();
    transcribed += t[kPauseBins - 1].size();
  }
  EXPECT_LT(transcribed, bonafide);
}

TEST(Corpus, SizeAndOrder) {
  const auto c = synth::generate_corpus(69, 4);
  EXPECT_EQ(c.size(), 1242u);
  EXPECT_EQ(c.users().size(), 69u);
  EXPECT_THROW(synth::generate_corpus(1, 4), Error);
  EXPECT_EQ(write_log_stream(c), write_log_stream(synth::generate_corpus(69, 4)));
}

// Transcribed bursts run longer than bona fide ones by at least one pooled std.
TEST(Corpus, PBurstMeansSeparateTranscribedFromBonaFide) {
  const auto c = synth::generate_corpus(40, 12);
  std::vector<double> b, t;
  for (const auto& log : c.logs()) {
    if (log.task.scenario == Scenario::Paraphrased) continue;
    std::vector<double> len;
    for (const auto& burst : extract_p_bursts(log)) len.push_back(static_cast<double>(burst.length_keystrokes));
    (log.task.scenario == Scenario::BonaFide ? b : t).push_back(stats::mean(len));
  }
  const double pooled = std::sqrt((stats::stddev(b) * stats::stddev(b) + stats::stddev(t) * stats::stddev(t)) / 2);
  EXPECT_GE(stats::mean(t) - stats::mean(b), pooled);
}

TEST(Knobs, JsonRoundTrip) {
  synth::ScenarioKnobs k;
  k.effect[1].pace_mult = 0.77;
  k.effect[2].cognition_sensitive = true;
  const auto j = synth::knobs_to_json(k);
  EXPECT_EQ(synth::knobs_from_json(nlohmann::json::parse(j.dump())), k);
  EXPECT_EQ(synth::knobs_from_json(nlohmann::json::object()), synth::ScenarioKnobs{});
}

TEST(Knobs, ChangeTheOutput) {
  synth::ScenarioKnobs k;
  k.effect[0].pace_mult = 2.0;
  const auto p = synth::generate_profile(1, 0);
  EXPECT_NE(synth::generate_session(p, {Scenario::BonaFide, 1}, k), synth::generate_session(p, {Scenario::BonaFide, 1}));
  EXPECT_EQ(synth::generate_session(p, {Scenario::Paraphrased, 1}, k),
            synth::generate_session(p, {Scenario::Paraphrased, 1}));
}
