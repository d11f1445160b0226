#include <gtest/gtest.h>

#include <filesystem>

#include <keytrace/manifest.hpp>
#include <keytrace/pipeline.hpp>
#include <keytrace/synthgen.hpp>

using namespace keytrace;

TEST(Manifest, RoundTripAndHash) {
  Manifest m;
  m.command = "run";
  m.config = {{"regime", "hl"}, {"seed", 3}};
  m.seeds = {{"split", 3}};
  m.inputs["corpus.jsonl"] = content_hash("abc");
  const auto back = Manifest::from_json(nlohmann::ordered_json::parse(m.dump()));
  EXPECT_EQ(back.dump(), m.dump());
  EXPECT_EQ(back.hash(), m.hash());
  auto changed = m;
  changed.config["seed"] = 4;
  EXPECT_NE(changed.hash(), m.hash());
  EXPECT_EQ(content_hash(""), "fnv1a64:cbf29ce484222325");

  const auto dir = std::filesystem::temp_directory_path() / "keytrace_manifest_test";
  std::filesystem::create_directories(dir);
  m.write(dir);
  EXPECT_EQ(Manifest::read(dir / kManifestFile).dump(), m.dump());
  write_file(dir / kManifestFile, "{not json");
  EXPECT_THROW(Manifest::read(dir / kManifestFile), Error);
  std::filesystem::remove_all(dir);
}

TEST(RunConfig, MergeKeepsAbsentFields) {
  RunConfig c;
  c.seed = 9;
  c.merge_json({{"regime", "lh"}, {"ga", {{"population", 6}}}});
  EXPECT_EQ(c.regime, Regime::LH);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.ga.population_size, 6);
  EXPECT_EQ(c.ga.generations, learn::GAConfig{}.generations);

  RunConfig d;
  d.merge_json(nlohmann::json::parse(c.to_json().dump()));
  EXPECT_EQ(d.to_json(), c.to_json());
  EXPECT_THROW(d.merge_json({{"regime", "xx"}}), Error);
  EXPECT_THROW(d.merge_json({{"splits", "50-50"}}), Error);
}

TEST(RunExperiment, StandardSplitsOnSmallCorpus) {
  const auto corpus = synth::generate_corpus(12, 6);
  RunConfig cfg;
  cfg.family = FeatureFamily::Rhythmic;
  cfg.search = false;
  cfg.seed = 2;
  std::size_t calls = 0;
  const auto outcomes = run_experiment(corpus, cfg, [&](const SplitOutcome&) { ++calls; });
  ASSERT_EQ(outcomes.size(), 5u);
  EXPECT_EQ(calls, 5u);
  const auto results = results_of(outcomes);
  for (const auto& r : results) {
    ASSERT_TRUE(r.ok()) << *r.error;
    EXPECT_EQ(r.train_percent, 70);
    EXPECT_EQ(r.train_rows, 3 * train_size(70, 12));
    EXPECT_EQ(r.confusion.total(), static_cast<std::int64_t>(r.test_rows));
    for (int k = 0; k < 3; ++k) EXPECT_EQ(r.confusion.support(k), static_cast<std::int64_t>(12 - train_size(70, 12)));
  }
  const auto cm = standard_confusion(results);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(cm.support(k), static_cast<std::int64_t>(5 * (12 - train_size(70, 12))));

  // same config, same answers
  const auto again = results_of(run_experiment(corpus, cfg));
  for (std::size_t i = 0; i < results.size(); ++i) EXPECT_EQ(again[i].confusion, results[i].confusion);
}
