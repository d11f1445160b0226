#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "../rng.hpp"
#include "dense.hpp"
#include "model.hpp"

namespace keytrace::learn {

/// Fold index per sample. Within each class the per-fold counts differ by at
/// most one; classes are dealt round-robin continuing where the previous
/// class stopped, so fold sizes stay balanced as well.
inline std::vector<int> stratified_kfold(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw Error("k-fold needs k >= 2");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  for (const auto& [label, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(k)) {
      throw Error("class " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                  " members, fewer than k=" + std::to_string(k));
    }
  }
  std::vector<int> fold(y.size(), 0);
  Rng rng(seed);
  std::size_t next = 0;
  for (auto& [label, idx] : by_class) {
    rng.shuffle(std::span<std::size_t>(idx));
    for (auto i : idx) fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return fold;
}

struct CvResult {
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
};

inline CvResult cross_validate(const ClassifierSpec& spec, const Dense& x, std::span<const int> y,
                               int k, std::uint64_t fold_seed) {
  const auto fold = stratified_kfold(y, k, fold_seed);
  CvResult r;
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> test_idx;
    for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? test_idx : train_idx).push_back(i);
    std::vector<int> y_train;
    for (auto i : train_idx) y_train.push_back(y[i]);
    const auto model = fit(spec, x.take_rows(train_idx), y_train);
    const auto pred = model.predict(x.take_rows(test_idx));
    std::size_t correct = 0;
    for (std::size_t t = 0; t < test_idx.size(); ++t) correct += pred.labels[t] == y[test_idx[t]];
    r.fold_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(test_idx.size()));
  }
  r.mean_accuracy = std::accumulate(r.fold_accuracy.begin(), r.fold_accuracy.end(), 0.0) /
                    static_cast<double>(k);
  return r;
}

}  // namespace keytrace::learn
