#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include <keytrace/preprocess.hpp>
#include <keytrace/synthgen.hpp>

#include "support.hpp"

using namespace keytrace;
using kt_test::dn;
using kt_test::make_log;
using kt_test::up;

namespace {

std::size_t count_kind(const CorrectionLedger& l, CorrectionKind k) {
  return static_cast<std::size_t>(
      std::count_if(l.begin(), l.end(), [k](const auto& r) { return r.kind == k; }));
}

std::size_t removed_total(const CorrectionLedger& l) {
  return std::accumulate(l.begin(), l.end(), std::size_t{0},
                         [](std::size_t n, const auto& r) { return n + r.removed; });
}

}  // namespace

TEST(Table2, CorrectedColumn) {
  const auto raw = kt_test::fixture_log("table2.jsonl");
  const auto expected = kt_test::fixture_log("table2_corrected.jsonl");
  const auto r = preprocess(raw);
  EXPECT_EQ(r.log, expected);
  std::vector<std::string> values;
  for (const auto& e : r.log.events) values.push_back(e.key_value);
  EXPECT_EQ(values, (std::vector<std::string>{"ㄱ", "Shift", "ㄱ", "ㅃ", "Shift", "ㅃ"}));
  ASSERT_EQ(r.ledger.size(), 2u);
  EXPECT_EQ(count_kind(r.ledger, CorrectionKind::ShiftRelabel), 2u);
  EXPECT_EQ(r.ledger[0].event_index, 2u);
  EXPECT_EQ(r.ledger[0].before, "ㄲ");
  EXPECT_EQ(r.ledger[0].after, "ㄱ");
  EXPECT_FALSE(r.ledger[0].flagged);
  EXPECT_EQ(r.ledger[1].event_index, 5u);
  EXPECT_EQ(r.ledger[1].before, "ㅂ");
  EXPECT_EQ(r.ledger[1].after, "ㅃ");
}

TEST(Table2, RelabelStageAlone) {
  const auto r = relabel_shift_variants(kt_test::fixture_log("table2.jsonl"), ShiftPairTable::dubeolsik());
  EXPECT_EQ(r.log, kt_test::fixture_log("table2_corrected.jsonl"));
  EXPECT_EQ(r.ledger.size(), 2u);
}

TEST(DropUnidentified, CapsLockBlock) {
  const auto log = make_log({dn("CapsLock", "CapsLock", 10), dn("Unidentified", "CapsLock", 11),
                             up("Unidentified", "CapsLock", 12), up("CapsLock", "CapsLock", 13)});
  const auto r = drop_unidentified(log);
  EXPECT_EQ(r.log.events,
            (std::vector<KeyEvent>{dn("CapsLock", "CapsLock", 10), up("CapsLock", "CapsLock", 13)}));
  ASSERT_EQ(r.ledger.size(), 2u);
  EXPECT_FALSE(r.ledger[0].flagged);
  EXPECT_FALSE(r.ledger[1].flagged);
}

TEST(DropUnidentified, CleanLogUnchanged) {
  const auto log = kt_test::typed({{"ㄱ", "KeyR"}, {"ㅏ", "KeyK"}}, {120});
  const auto r = drop_unidentified(log);
  EXPECT_EQ(r.log, log);
  EXPECT_TRUE(r.ledger.empty());
}

TEST(DropUnidentified, WithoutCapsLockIsFlagged) {
  const auto log = make_log({dn("a", "KeyA", 1), dn("Unidentified", "Unidentified", 2),
                             up("a", "KeyA", 3)});
  const auto r = drop_unidentified(log);
  EXPECT_EQ(r.log.events.size(), 2u);
  ASSERT_EQ(r.ledger.size(), 1u);
  EXPECT_TRUE(r.ledger[0].flagged);
  EXPECT_TRUE(kt_test::pairing_ok(r.log));
}

TEST(CollapseRepeats, BackspaceHeld) {
  const auto log = make_log({dn("Backspace", "Backspace", 0), dn("Backspace", "Backspace", 10),
                             dn("Backspace", "Backspace", 20), dn("Backspace", "Backspace", 30),
                             up("Backspace", "Backspace", 40)});
  const auto r = collapse_repeats(log);
  EXPECT_EQ(r.log.events, (std::vector<KeyEvent>{dn("Backspace", "Backspace", 0),
                                                 up("Backspace", "Backspace", 40)}));
  ASSERT_EQ(r.ledger.size(), 1u);
  EXPECT_EQ(r.ledger[0].kind, CorrectionKind::CollapsedRepeat);
  EXPECT_EQ(r.ledger[0].removed, 3u);
  EXPECT_EQ(r.ledger[0].event_index, 1u);
}

TEST(CollapseRepeats, SinglePairUnchanged) {
  const auto log = make_log({dn("a", "KeyA", 0), up("a", "KeyA", 50)});
  const auto r = collapse_repeats(log);
  EXPECT_EQ(r.log, log);
  EXPECT_TRUE(r.ledger.empty());
}

// Two keys auto-repeating with random interleavings; oracle keeps each
// key's first Down and its Up.
TEST(CollapseRepeats, InterleavedKeysCollapseIndependently) {
  Rng rng(42);
  for (int trial = 0; trial < 500; ++trial) {
    const auto na = rng.between(1, 6);
    const auto nb = rng.between(1, 6);
    std::vector<std::pair<char, bool>> seq;  // (key, is_down)
    std::int64_t left_a = na, left_b = nb;
    bool a_up = false, b_up = false;
    while (!(a_up && b_up)) {
      const bool pick_a = !a_up && (b_up || rng.bernoulli(0.5));
      auto& left = pick_a ? left_a : left_b;
      auto& done = pick_a ? a_up : b_up;
      if (left > 0) {
        seq.push_back({pick_a ? 'a' : 'b', true});
        --left;
      } else {
        seq.push_back({pick_a ? 'a' : 'b', false});
        done = true;
      }
    }
    KeystrokeLog log = make_log({});
    std::int64_t t = 0;
    for (auto [k, d] : seq) {
      const std::string v(1, k);
      const std::string code = k == 'a' ? "KeyA" : "KeyB";
      log.events.push_back(d ? dn(v, code, t) : up(v, code, t));
      t += 7;
    }
    std::vector<KeyEvent> expected;
    std::set<char> seen_down;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const auto [k, d] = seq[i];
      if (!d || seen_down.insert(k).second) expected.push_back(log.events[i]);
    }
    const auto r = collapse_repeats(log);
    ASSERT_EQ(r.log.events, expected) << "trial " << trial;
    EXPECT_EQ(r.ledger.size(), static_cast<std::size_t>((na > 1) + (nb > 1)));
    EXPECT_EQ(removed_total(r.ledger), static_cast<std::size_t>(na - 1 + nb - 1));
  }
}

TEST(RelabelShiftVariants, ConsistentPairHasNoRecords) {
  const auto log = make_log({dn("ㄲ", "KeyR", 0), up("ㄲ", "KeyR", 60)});
  const auto r = relabel_shift_variants(log, ShiftPairTable::dubeolsik());
  EXPECT_EQ(r.log, log);
  EXPECT_TRUE(r.ledger.empty());
}

TEST(RelabelShiftVariants, UnrelatedValueIsFlagged) {
  const auto log = make_log({dn("ㄱ", "KeyR", 0), up("ㅏ", "KeyR", 60)});
  const auto r = relabel_shift_variants(log, ShiftPairTable::dubeolsik());
  ASSERT_EQ(r.ledger.size(), 1u);
  EXPECT_TRUE(r.ledger[0].flagged);
  EXPECT_EQ(r.log.events[1].key_value, "ㄱ");
}

TEST(ShiftPairTable, Bijective) {
  const auto t = ShiftPairTable::dubeolsik();
  for (const auto& [base, shifted] : t.pairs()) {
    EXPECT_EQ(t.partner(base), shifted);
    EXPECT_EQ(t.partner(shifted), base);
    EXPECT_TRUE(t.related(base, shifted));
    EXPECT_TRUE(t.related(shifted, base));
  }
  EXPECT_FALSE(t.partner("Shift"));
  EXPECT_THROW(ShiftPairTable(std::map<std::string, std::string>{{"a", "A"}, {"b", "A"}}), Error);
  EXPECT_THROW(ShiftPairTable(std::map<std::string, std::string>{{"a", "a"}}), Error);
  EXPECT_THROW(ShiftPairTable(std::map<std::string, std::string>{{"a", "b"}, {"b", "c"}}), Error);
}

TEST(Preprocess, CleanLogIsIdentity) {
  const auto profile = synth::generate_profile(3, 1);
  const auto log = synth::generate_session(profile, {Scenario::Paraphrased, 4});
  ASSERT_TRUE(kt_test::pairing_ok(log));
  const auto r = preprocess(log);
  EXPECT_EQ(r.log, log);
  EXPECT_TRUE(r.ledger.empty());
}

TEST(Preprocess, InjectedMislabelsAreExactlyRelabeled) {
  synth::DefectOptions defects;
  defects.enabled = true;
  defects.mislabel_rate = 0.05;
  const auto profile = synth::generate_profile(9, 4);
  std::size_t events = 0;
  std::size_t injected = 0;
  for (const auto& task : all_tasks()) {
    const auto trace = synth::generate_session_trace(profile, task, {}, defects);
    events += trace.log.events.size();
    injected += trace.mislabeled_up_indices.size();
    const auto r = preprocess(trace.log);
    std::vector<std::size_t> relabeled;
    for (const auto& rec : r.ledger) {
      if (rec.kind == CorrectionKind::ShiftRelabel) relabeled.push_back(rec.event_index);
    }
    EXPECT_EQ(relabeled, trace.mislabeled_up_indices) << task.str();
    EXPECT_EQ(r.log, trace.clean) << task.str();
    EXPECT_EQ(r.ledger.size(), trace.expected_ledger_size) << task.str();
  }
  EXPECT_GE(events, 10000u);
  EXPECT_GT(injected, 0u);
}

TEST(Preprocess, FuzzPairingConservationIdempotence) {
  Rng rng(2024);
  for (int i = 0; i < 2000; ++i) {
    const auto log = kt_test::fuzz_log(rng);
    const auto r = preprocess(log);
    ASSERT_TRUE(kt_test::pairing_ok(r.log)) << "fuzz log " << i;
    ASSERT_TRUE(satisfies_pairing(r.log));
    ASSERT_EQ(r.log.events.size() + removed_total(r.ledger), log.events.size());
    const auto again = preprocess(r.log);
    ASSERT_EQ(again.log, r.log);
    ASSERT_TRUE(again.ledger.empty());
    ASSERT_TRUE(std::is_sorted(r.ledger.begin(), r.ledger.end(), [](const auto& a, const auto& b) {
      return a.event_index < b.event_index;
    }));
  }
}

TEST(Preprocess, SatisfiesPairingAgreesWithOracle) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const auto log = kt_test::fuzz_log(rng);
    ASSERT_EQ(satisfies_pairing(log), kt_test::pairing_ok(log));
  }
}

TEST(PreprocessCorpus, LedgerExport) {
  Corpus c;
  c.add(kt_test::fixture_log("table2.jsonl"));
  const auto r = preprocess_corpus(c);
  EXPECT_EQ(r.correction_count(), 2u);
  std::ostringstream out;
  write_ledger(r, out);
  const auto text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const auto j = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(j["kind"], "ShiftRelabel");
  EXPECT_EQ(j["user"], "p01");
  EXPECT_EQ(j["task"], "0.1");
  EXPECT_EQ(j["index"], 2);
  EXPECT_EQ(j["before"], "ㄲ");
  EXPECT_EQ(j["after"], "ㄱ");
}
