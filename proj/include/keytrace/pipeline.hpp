#pragma once

// One experiment = regime x feature family x classifier over a set of
// user-disjoint splits. Everything fitted per split (common temporal
// features, clipping, medians, MI selection, GA search, final model) sees
// only the training users of that split.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "eval.hpp"
#include "experiment.hpp"
#include "learn/ga.hpp"
#include "learn/model.hpp"

namespace keytrace {

enum class SplitSelection { All, Standard };

inline std::string_view split_selection_name(SplitSelection s) {
  return s == SplitSelection::All ? "all" : "70-30";
}

inline SplitSelection parse_split_selection(std::string_view s) {
  if (s == "all") return SplitSelection::All;
  if (s == "70-30") return SplitSelection::Standard;
  throw Error("unknown split selection '" + std::string(s) + "' (expected all|70-30)");
}

struct RunConfig {
  Regime regime = Regime::Unaware;
  FeatureFamily family = FeatureFamily::Temporal;
  learn::ClassifierFamily model = learn::ClassifierFamily::GradientBoostedTrees;
  SplitSelection splits = SplitSelection::Standard;
  std::uint64_t seed = 0;
  bool search = true;  // GA search; otherwise the family's default spec
  learn::GAConfig ga{};
  int jobs = 1;
  DatasetOptions data{};

  nlohmann::ordered_json to_json() const {
    return {{"regime", regime_name(regime)},
            {"family", family_name(family)},
            {"model", learn::classifier_name(model)},
            {"splits", split_selection_name(splits)},
            {"seed", seed},
            {"search", search},
            {"ga",
             {{"population", ga.population_size},
              {"generations", ga.generations},
              {"crossover_rate", ga.crossover_rate},
              {"mutation_rate", ga.mutation_rate},
              {"tournament_size", ga.tournament_size},
              {"elitism", ga.elitism_count},
              {"cv_folds", ga.cv_folds}}},
            {"jobs", jobs},
            {"mi_bins", data.mi_bins},
            {"coverage", data.temporal.coverage_threshold}};
  }

  /// Fields absent from `j` keep their current values.
  void merge_json(const nlohmann::json& j) {
    if (j.contains("regime")) regime = parse_regime(j.at("regime").get<std::string>());
    if (j.contains("family")) family = parse_family(j.at("family").get<std::string>());
    if (j.contains("model")) model = learn::parse_classifier(j.at("model").get<std::string>());
    if (j.contains("splits")) splits = parse_split_selection(j.at("splits").get<std::string>());
    seed = j.value("seed", seed);
    search = j.value("search", search);
    if (j.contains("ga")) {
      const auto& g = j.at("ga");
      ga.population_size = g.value("population", ga.population_size);
      ga.generations = g.value("generations", ga.generations);
      ga.crossover_rate = g.value("crossover_rate", ga.crossover_rate);
      ga.mutation_rate = g.value("mutation_rate", ga.mutation_rate);
      ga.tournament_size = g.value("tournament_size", ga.tournament_size);
      ga.elitism_count = g.value("elitism", ga.elitism_count);
      ga.cv_folds = g.value("cv_folds", ga.cv_folds);
    }
    jobs = j.value("jobs", jobs);
    data.mi_bins = j.value("mi_bins", data.mi_bins);
    data.temporal.coverage_threshold = j.value("coverage", data.temporal.coverage_threshold);
  }
};

struct RowPrediction {
  RowKey key;
  int predicted = 0;
};

struct SplitOutcome {
  SplitResult result;
  std::vector<std::string> selected_features;
  std::optional<learn::GAResult> search;
  std::optional<learn::TrainedModel> model;
  std::vector<RowPrediction> predictions;
};

inline std::vector<SplitPlan> select_plans(std::vector<SplitPlan> all, SplitSelection s) {
  if (s == SplitSelection::All) return all;
  std::vector<SplitPlan> out;
  for (auto& p : all) {
    if (p.is_standard_70_30()) out.push_back(std::move(p));
  }
  return out;
}

/// Never throws for data problems; they end up in result.error.
inline SplitOutcome run_split(const FeatureStore& store, const SplitPlan& plan,
                              const RunConfig& cfg) {
  SplitOutcome out;
  auto& r = out.result;
  r.split_id = plan.id;
  r.train_percent = plan.train_percent;
  r.trial = plan.trial;
  try {
    const auto data = store.materialize(plan, cfg.regime, cfg.family, cfg.data);
    r.train_rows = data.train.rows.size();
    r.test_rows = data.test.rows.size();
    out.selected_features = data.selected;
    if (data.test.rows.empty()) throw Error("no test rows");

    const auto x = learn::Dense::from_rows(data.train.rows);
    const auto y = data.train.labels();
    const auto split_seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(plan.id) + 1);
    learn::ClassifierSpec spec;
    if (cfg.search) {
      auto ga = cfg.ga;
      ga.seed = split_seed;
      out.search = learn::ga_optimize(cfg.model, x, y, ga);
      spec = out.search->best;
      r.cv_fitness = out.search->best_fitness;
    } else {
      spec = learn::default_spec(cfg.model, split_seed);
    }
    r.model = spec.describe();
    out.model = learn::fit(spec, data.train);
    const auto pred = out.model->predict(data.test);
    const auto y_test = data.test.labels();
    r.confusion = confusion_matrix(y_test, pred.labels);
    r.accuracy = r.confusion.accuracy();
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
      out.predictions.push_back({data.test.row_keys[i], pred.labels[i]});
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    out.model.reset();
  }
  return out;
}

using SplitCallback = std::function<void(const SplitOutcome&)>;

/// Split jobs run on up to cfg.jobs threads; outcomes come back in plan
/// order. With one job the GA may use the threads instead.
inline std::vector<SplitOutcome> run_experiment(const Corpus& corpus, const RunConfig& cfg,
                                                const SplitCallback& on_done = {}) {
  const auto plans = select_plans(generate_splits(corpus.users(), cfg.seed), cfg.splits);
  const FeatureStore store(corpus, cfg.regime);
  std::vector<SplitOutcome> outcomes(plans.size());

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.jobs, 1)), plans.size());
  auto split_cfg = cfg;
  if (workers > 1) split_cfg.ga.jobs = 1;
  else split_cfg.ga.jobs = std::max(cfg.jobs, 1);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (auto i = next++; i < plans.size(); i = next++) outcomes[i] = run_split(store, plans[i], split_cfg);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (on_done) {
    for (const auto& o : outcomes) on_done(o);
  }
  return outcomes;
}

inline std::vector<SplitResult> results_of(const std::vector<SplitOutcome>& outcomes) {
  std::vector<SplitResult> r;
  r.reserve(outcomes.size());
  for (const auto& o : outcomes) r.push_back(o.result);
  return r;
}

}  // namespace keytrace
