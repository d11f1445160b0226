#pragma once

// Genetic hyperparameter search. A genome holds one number in [0, 1] per
// gene of the search space; decoding maps it onto the gene's range. Each
// generation keeps the elite, fills the rest by tournament selection,
// uniform crossover and per-gene resampling mutation.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "../rng.hpp"
#include "cv.hpp"
#include "model.hpp"

namespace keytrace::learn {

struct GAConfig {
  int population_size = 20;
  int generations = 10;  // populations evaluated, the random initial one included
  double crossover_rate = 0.5;
  double mutation_rate = 0.1;
  int tournament_size = 3;
  int elitism_count = 2;
  std::uint64_t seed = 0;
  int jobs = 1;
  int cv_folds = 5;

  void validate() const {
    if (population_size < 4) throw Error("GA population_size must be >= 4");
    if (elitism_count < 0 || elitism_count >= population_size) {
      throw Error("GA elitism_count must be in [0, population_size)");
    }
    if (generations < 1) throw Error("GA generations must be >= 1");
    if (tournament_size < 1) throw Error("GA tournament_size must be >= 1");
    if (crossover_rate < 0 || crossover_rate > 1 || mutation_rate < 0 || mutation_rate > 1) {
      throw Error("GA rates must lie in [0, 1]");
    }
  }
};

struct GAResult {
  ClassifierSpec best;
  double best_fitness = 0.0;
  std::vector<double> best_so_far;      // one entry per generation
  std::vector<double> generation_best;  // best of each generation's population
  std::vector<ClassifierSpec> initial_population;
  std::size_t evaluations = 0;          // distinct specs scored
};

using FitnessFn = std::function<double(const ClassifierSpec&)>;

// Seed given to every candidate model, so candidates differ only in their
// hyperparameters.
inline std::uint64_t candidate_seed(const GAConfig& cfg) { return mix_seed(cfg.seed, 0xA5); }

inline std::vector<std::vector<double>> initial_genomes(const SearchSpace& space,
                                                        const GAConfig& cfg) {
  Rng rng(mix_seed(cfg.seed, 0x1417));
  std::vector<std::vector<double>> pop(static_cast<std::size_t>(cfg.population_size));
  for (auto& g : pop) {
    g.resize(space.genes.size());
    for (auto& u : g) u = rng.uniform();
  }
  return pop;
}

inline GAResult ga_optimize(const SearchSpace& space, const FitnessFn& fitness,
                            const GAConfig& cfg) {
  cfg.validate();
  const auto seed = candidate_seed(cfg);
  Rng rng(mix_seed(cfg.seed, 0x6a5));
  std::map<std::string, double> cache;
  GAResult result;
  result.best_fitness = -1.0;

  auto evaluate = [&](const std::vector<std::vector<double>>& pop) {
    std::vector<ClassifierSpec> specs;
    for (const auto& g : pop) specs.push_back(space.decode(g, seed));
    std::vector<const ClassifierSpec*> todo;
    std::map<std::string, double> fresh;
    for (const auto& s : specs) {
      const auto key = s.describe();
      if (!cache.contains(key) && fresh.emplace(key, 0.0).second) todo.push_back(&s);
    }
    std::vector<double> scores(todo.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (auto i = next++; i < todo.size(); i = next++) scores[i] = fitness(*todo[i]);
    };
    const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.jobs, 1)), todo.size());
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    for (std::size_t i = 0; i < todo.size(); ++i) cache[todo[i]->describe()] = scores[i];
    result.evaluations = cache.size();

    std::vector<double> fit(pop.size());
    double gen_best = -1.0;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      fit[i] = cache[specs[i].describe()];
      gen_best = std::max(gen_best, fit[i]);
      if (fit[i] > result.best_fitness) {
        result.best_fitness = fit[i];
        result.best = specs[i];
      }
    }
    result.generation_best.push_back(gen_best);
    result.best_so_far.push_back(result.best_fitness);
    return fit;
  };

  auto pop = initial_genomes(space, cfg);
  for (const auto& g : pop) result.initial_population.push_back(space.decode(g, seed));
  auto fit = evaluate(pop);

  for (int gen = 1; gen < cfg.generations; ++gen) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });
    auto tournament = [&] {
      std::size_t best = static_cast<std::size_t>(rng.below(pop.size()));
      for (int t = 1; t < cfg.tournament_size; ++t) {
        const auto c = static_cast<std::size_t>(rng.below(pop.size()));
        if (fit[c] > fit[best] || (fit[c] == fit[best] && c < best)) best = c;
      }
      return best;
    };

    std::vector<std::vector<double>> next;
    for (int e = 0; e < cfg.elitism_count; ++e) next.push_back(pop[order[static_cast<std::size_t>(e)]]);
    while (next.size() < pop.size()) {
      const auto& a = pop[tournament()];
      const auto& b = pop[tournament()];
      std::vector<double> child(a.size());
      for (std::size_t g = 0; g < a.size(); ++g) {
        child[g] = rng.bernoulli(cfg.crossover_rate) ? b[g] : a[g];
        if (rng.bernoulli(cfg.mutation_rate)) child[g] = rng.uniform();
      }
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    fit = evaluate(pop);
  }
  return result;
}

/// Mean stratified k-fold CV accuracy on (x, y) is the fitness.
inline GAResult ga_optimize(const SearchSpace& space, const Dense& x, std::span<const int> y,
                            const GAConfig& cfg) {
  const auto fold_seed = mix_seed(cfg.seed, 0xF01D);
  return ga_optimize(
      space,
      [&](const ClassifierSpec& s) { return cross_validate(s, x, y, cfg.cv_folds, fold_seed).mean_accuracy; },
      cfg);
}

inline GAResult ga_optimize(ClassifierFamily family, const Dense& x, std::span<const int> y,
                            const GAConfig& cfg) {
  return ga_optimize(default_search_space(family), x, y, cfg);
}

}  // namespace keytrace::learn
