#include <gtest/gtest.h>

#include <sstream>

#include <keytrace/eval.hpp>
#include <keytrace/rng.hpp>

using namespace keytrace;

namespace {

ConfusionMatrix3 cm_of(std::array<std::array<std::int64_t, 3>, 3> c) {
  ConfusionMatrix3 m;
  m.counts = c;
  return m;
}

SplitResult result(int id, int pct, int trial, double acc) {
  SplitResult r;
  r.split_id = id;
  r.train_percent = pct;
  r.trial = trial;
  r.accuracy = acc;
  return r;
}

}  // namespace

TEST(Accuracy, Examples) {
  const std::vector<int> y{0, 1, 2};
  EXPECT_DOUBLE_EQ(accuracy(y, y), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(y, std::vector<int>{0, 1, 0}), 2.0 / 3.0);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), Error);
  EXPECT_THROW(accuracy(y, std::vector<int>{0}), Error);
}

TEST(Accuracy, TraceOverTotalOnRandomVectors) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<int> a(static_cast<std::size_t>(rng.between(1, 50))), b(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = static_cast<int>(rng.below(3));
      b[k] = static_cast<int>(rng.below(3));
    }
    const auto cm = confusion_matrix(a, b);
    EXPECT_EQ(cm.total(), static_cast<std::int64_t>(a.size()));
    EXPECT_DOUBLE_EQ(cm.accuracy(), accuracy(a, b));
  }
  EXPECT_THROW(ConfusionMatrix3{}.accuracy(), Error);
  EXPECT_THROW(confusion_matrix(std::vector<int>{3}, std::vector<int>{0}), Error);
}

TEST(Recall, Examples) {
  const auto diag = per_class_recall(cm_of({{{5, 0, 0}, {0, 7, 0}, {0, 0, 2}}}));
  for (const auto& r : diag) EXPECT_DOUBLE_EQ(*r, 1.0);

  const auto cm = cm_of({{{100, 5, 0}, {9, 96, 0}, {4, 0, 101}}});
  const auto r = per_class_recall(cm);
  EXPECT_EQ(percent(*r[2]), "96.19");
  // depends only on the diagonal and row sum
  const auto moved = per_class_recall(cm_of({{{100, 5, 0}, {9, 96, 0}, {0, 4, 101}}}));
  EXPECT_EQ(moved[2], r[2]);

  const auto empty_row = per_class_recall(cm_of({{{1, 0, 0}, {0, 0, 0}, {0, 0, 1}}}));
  EXPECT_FALSE(empty_row[1]);
}

TEST(Aggregate, RowSums) {
  std::vector<ConfusionMatrix3> five;
  Rng rng(2);
  for (int t = 0; t < 5; ++t) {
    ConfusionMatrix3 m;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto a = static_cast<std::int64_t>(rng.below(22));
      const auto b = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(22 - a)));
      m.counts[i] = {a, b, 21 - a - b};
    }
    five.push_back(m);
  }
  const auto sum = aggregate_confusions(five);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(sum.support(k), 105);
  EXPECT_EQ(aggregate_confusions(std::span<const ConfusionMatrix3>(five.data(), 1)), five[0]);
}

TEST(Aggregate, AccuracyOfSumIsNotMeanOfAccuracies) {
  const auto a = cm_of({{{10, 0, 0}, {0, 0, 0}, {0, 0, 0}}});  // 1.0 on 10 rows
  const auto b = cm_of({{{0, 0, 0}, {0, 1, 29}, {0, 0, 0}}});  // 1/30
  const std::vector<ConfusionMatrix3> both{a, b};
  const auto sum = aggregate_confusions(both);
  EXPECT_DOUBLE_EQ(sum.accuracy(), 11.0 / 40.0);
  EXPECT_NE(sum.accuracy(), (a.accuracy() + b.accuracy()) / 2);
}

TEST(Curves, MeanAndBand) {
  std::vector<SplitResult> rs;
  const double accs[5] = {0.8, 0.9, 0.85, 0.9, 0.8};
  for (int t = 0; t < 5; ++t) rs.push_back(result(t, 30, t + 1, accs[t]));
  for (int t = 0; t < 5; ++t) rs.push_back(result(5 + t, 32, t + 1, 0.7));
  const auto c = build_curves(rs);
  ASSERT_EQ(c.points.size(), 21u);
  EXPECT_NEAR(*c.points[0].mean, 0.85, 1e-12);
  EXPECT_DOUBLE_EQ(*c.points[0].min, 0.8);
  EXPECT_DOUBLE_EQ(*c.points[0].max, 0.9);
  EXPECT_DOUBLE_EQ(*c.points[1].min, *c.points[1].max);
  EXPECT_FALSE(c.points[2].mean);
  EXPECT_FALSE(c.complete());
}

TEST(Curves, FailedTrialsLeaveGaps) {
  std::vector<SplitResult> rs;
  int id = 0;
  for (int pct = 30; pct <= 70; pct += 2) {
    for (int t = 1; t <= 5; ++t) rs.push_back(result(id++, pct, t, 0.5));
  }
  EXPECT_TRUE(build_curves(rs).complete());
  rs[3].error = "boom";
  const auto c = build_curves(rs);
  EXPECT_FALSE(c.complete());
  EXPECT_EQ(c.points[0].trials, 4u);
}

TEST(Curves, StandardConfusionSumsSeventyPercentOnly) {
  std::vector<SplitResult> rs;
  for (int t = 0; t < 5; ++t) {
    auto r = result(100 + t, 70, t + 1, 1.0);
    r.confusion = cm_of({{{21, 0, 0}, {0, 21, 0}, {0, 0, 21}}});
    rs.push_back(r);
  }
  auto other = result(0, 30, 1, 1.0);
  other.confusion = cm_of({{{40, 0, 0}, {0, 0, 0}, {0, 0, 0}}});
  rs.push_back(other);
  const auto cm = standard_confusion(rs);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(cm.support(k), 105);
}

TEST(Report, ListsProvenanceAndPercentages) {
  RunSummary run{"unaware", "rhythmic", "gbt", 42, "fnv1a64:00000000deadbeef", {}};
  auto r = result(100, 70, 1, 0.9);
  r.confusion = cm_of({{{19, 2, 0}, {2, 18, 1}, {0, 0, 21}}});
  run.results.push_back(r);
  auto bad = result(101, 70, 2, 0);
  bad.error = "degenerate training data";
  run.results.push_back(bad);
  const std::vector<RunSummary> runs{run};
  const auto text = render_report(runs);
  for (const char* needle : {"unaware", "rhythmic", "gbt", "seed: 42", "fnv1a64:00000000deadbeef",
                             "19 (90.48%)", "split 101 failed", "Transcribed 100.00%"}) {
    EXPECT_NE(text.find(needle), std::string::npos) << needle;
  }
  EXPECT_EQ(text.find("Cross-cognition"), std::string::npos);
}

TEST(Report, CrossCognitionComparison) {
  std::vector<RunSummary> runs;
  for (const char* fam : {"temporal", "rhythmic"}) {
    RunSummary run{"hl", fam, "gbt", 1, "h", {}};
    auto r = result(100, 70, 1, std::string(fam) == "temporal" ? 0.6 : 0.75);
    r.confusion = cm_of({{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
    run.results.push_back(r);
    runs.push_back(run);
  }
  const auto text = render_report(runs);
  EXPECT_NE(text.find("Cross-cognition"), std::string::npos);
  EXPECT_NE(text.find("| hl | gbt | 60.00% | 75.00% | 15.00 pts |"), std::string::npos) << text;
}

TEST(Csv, ConfusionAndRecall) {
  const auto cm = cm_of({{{101, 4, 0}, {0, 105, 0}, {0, 0, 0}}});
  std::ostringstream c, r;
  write_confusion_csv(cm, c);
  write_recall_csv(cm, r);
  EXPECT_NE(c.str().find("BonaFide,Paraphrased,4,3.81"), std::string::npos);
  EXPECT_NE(r.str().find("BonaFide,101,105,96.19"), std::string::npos);
  EXPECT_NE(r.str().find("Transcribed,0,0,undefined"), std::string::npos);
}
