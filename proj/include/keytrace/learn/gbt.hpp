#pragma once

// Depth-limited gradient-boosted trees with a softmax objective and
// second-order (gradient/hessian) leaf weights. Features are pre-binned at
// training-set quantiles; split thresholds are stored as raw values so
// prediction needs no binning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "../rng.hpp"
#include "dense.hpp"

namespace keytrace::learn {

struct GbtParams {
  int n_trees = 200;
  int max_depth = 4;
  double learning_rate = 0.1;
  double subsample = 1.0;
  double colsample = 1.0;  // fraction of features offered to each round's trees
  double lambda = 1.0;
  double min_child_weight = 1.0;
  int max_bins = 64;
  std::uint64_t seed = 0;
};

struct GbtNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct GbtTree {
  std::vector<GbtNode> nodes;

  double predict(std::span<const double> x) const {
    int n = 0;
    while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = nodes[static_cast<std::size_t>(n)];
      n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].value;
  }
};

class GbtModel {
 public:
  static GbtModel fit(const Dense& x, std::span<const int> y, int n_classes,
                      const GbtParams& params);

  std::vector<double> raw_scores(std::span<const double> x) const {
    std::vector<double> z = base_score_;
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      z[t % z.size()] += trees_[t].predict(x);
    }
    return z;
  }

  std::vector<double> predict_proba(std::span<const double> x) const {
    auto z = raw_scores(x);
    softmax_inplace(z);
    return z;
  }

  std::size_t tree_count() const { return trees_.size(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["base_score"] = base_score_;
    auto& trees = j["trees"] = nlohmann::json::array();
    for (const auto& t : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      }
      trees.push_back(std::move(nodes));
    }
    return j;
  }

  static GbtModel from_json(const nlohmann::json& j) {
    GbtModel m;
    m.base_score_ = j.at("base_score").get<std::vector<double>>();
    for (const auto& nodes : j.at("trees")) {
      GbtTree t;
      for (const auto& n : nodes) {
        t.nodes.push_back({n[0].get<int>(), n[1].get<double>(), n[2].get<int>(), n[3].get<int>(),
                           n[4].get<double>()});
      }
      m.trees_.push_back(std::move(t));
    }
    return m;
  }

  friend bool operator==(const GbtModel& a, const GbtModel& b) {
    return a.to_json() == b.to_json();
  }

 private:
  std::vector<double> base_score_;
  // round-major: tree t belongs to class t % n_classes
  std::vector<GbtTree> trees_;
};

namespace detail {

struct BinnedFeatures {
  // thresholds[f][b]: rows with bin <= b satisfy x <= thresholds[f][b]
  std::vector<std::vector<double>> thresholds;
  std::vector<std::uint8_t> codes;   // row-major, rows x features
  std::vector<std::size_t> offset;   // start of feature f in a flat histogram
  std::size_t n_features = 0;
  std::size_t total_bins = 0;

  std::uint8_t code(std::size_t row, std::size_t f) const { return codes[row * n_features + f]; }
  std::size_t bins_of(std::size_t f) const { return thresholds[f].size() + 1; }

  static BinnedFeatures build(const Dense& x, int max_bins) {
    BinnedFeatures b;
    const auto n = x.rows();
    const auto d = x.cols();
    b.n_features = d;
    b.thresholds.resize(d);
    b.codes.assign(n * d, 0);
    std::vector<double> col(n);
    for (std::size_t f = 0; f < d; ++f) {
      for (std::size_t i = 0; i < n; ++i) col[i] = x(i, f);
      std::vector<double> sorted = col;
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> uniq = sorted;
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      auto& thr = b.thresholds[f];
      if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
        for (std::size_t k = 1; k < uniq.size(); ++k) thr.push_back(0.5 * (uniq[k - 1] + uniq[k]));
      } else {
        for (int k = 1; k < max_bins; ++k) {
          thr.push_back(sorted[static_cast<std::size_t>(k) * n / static_cast<std::size_t>(max_bins)]);
        }
        thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
        // the largest value must fall right of every threshold
        while (!thr.empty() && thr.back() >= sorted.back()) thr.pop_back();
      }
      for (std::size_t i = 0; i < n; ++i) {
        b.codes[i * d + f] =
            static_cast<std::uint8_t>(std::lower_bound(thr.begin(), thr.end(), col[i]) - thr.begin());
      }
    }
    b.offset.resize(d);
    for (std::size_t f = 0; f < d; ++f) {
      b.offset[f] = b.total_bins;
      b.total_bins += b.bins_of(f);
    }
    return b;
  }
};

struct GH {
  double g = 0.0;
  double h = 0.0;
};

// Histograms of the larger child come from parent minus smaller child.
class TreeBuilder {
 public:
  TreeBuilder(const BinnedFeatures& bins, const GbtParams& p) : bins_(bins), p_(p) {}

  GbtTree build(std::span<const double> g, std::span<const double> h,
                std::vector<std::size_t> rows, std::vector<std::size_t> features) {
    g_ = g;
    h_ = h;
    features_ = std::move(features);
    tree_ = {};
    auto hist = histogram(rows);
    grow(std::move(rows), std::move(hist), 0);
    return std::move(tree_);
  }

 private:
  std::vector<GH> histogram(const std::vector<std::size_t>& rows) const {
    std::vector<GH> hist(bins_.total_bins);
    const auto d = bins_.n_features;
    for (auto i : rows) {
      const std::uint8_t* c = bins_.codes.data() + i * d;
      const double gi = g_[i];
      const double hi = h_[i];
      for (auto f : features_) {
        auto& cell = hist[bins_.offset[f] + c[f]];
        cell.g += gi;
        cell.h += hi;
      }
    }
    return hist;
  }

  int grow(std::vector<std::size_t> rows, std::vector<GH> hist, int depth) {
    double G = 0.0;
    double H = 0.0;
    for (auto i : rows) {
      G += g_[i];
      H += h_[i];
    }
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back({});
    auto make_leaf = [&] {
      tree_.nodes[static_cast<std::size_t>(id)].value = -G / (H + p_.lambda) * p_.learning_rate;
      return id;
    };
    if (depth >= p_.max_depth || rows.size() < 2) return make_leaf();

    const double parent = G * G / (H + p_.lambda);
    double best_gain = 1e-12;
    int best_f = -1;
    std::size_t best_b = 0;
    for (auto f : features_) {
      const auto n_bins = bins_.bins_of(f);
      if (n_bins < 2) continue;
      const GH* hf = hist.data() + bins_.offset[f];
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        gl += hf[b].g;
        hl += hf[b].h;
        const double gr = G - gl;
        const double hr = H - hl;
        if (hl < p_.min_child_weight || hr < p_.min_child_weight) continue;
        const double gain =
            0.5 * (gl * gl / (hl + p_.lambda) + gr * gr / (hr + p_.lambda) - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_b = b;
        }
      }
    }
    if (best_f < 0) return make_leaf();

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    const auto bf = static_cast<std::size_t>(best_f);
    for (auto i : rows) (bins_.code(i, bf) <= best_b ? left : right).push_back(i);
    rows.clear();
    rows.shrink_to_fit();

    std::vector<GH> left_hist;
    std::vector<GH> right_hist;
    if (depth + 1 < p_.max_depth) {
      const bool left_small = left.size() <= right.size();
      auto small = histogram(left_small ? left : right);
      for (std::size_t c = 0; c < hist.size(); ++c) {
        hist[c].g -= small[c].g;
        hist[c].h -= small[c].h;
      }
      left_hist = left_small ? std::move(small) : std::move(hist);
      right_hist = left_small ? std::move(hist) : std::move(small);
    }

    const int l = grow(std::move(left), std::move(left_hist), depth + 1);
    const int r = grow(std::move(right), std::move(right_hist), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_f;
    node.threshold = bins_.thresholds[bf][best_b];
    node.left = l;
    node.right = r;
    return id;
  }

  const BinnedFeatures& bins_;
  const GbtParams& p_;
  std::span<const double> g_;
  std::span<const double> h_;
  std::vector<std::size_t> features_;
  GbtTree tree_;
};

}  // namespace detail

inline GbtModel GbtModel::fit(const Dense& x, std::span<const int> y, int n_classes,
                              const GbtParams& params) {
  const auto n = x.rows();
  const auto k_classes = static_cast<std::size_t>(n_classes);
  GbtModel model;

  std::vector<double> counts(k_classes, 0.0);
  for (int label : y) counts[static_cast<std::size_t>(label)] += 1.0;
  model.base_score_.resize(k_classes);
  for (std::size_t k = 0; k < k_classes; ++k) {
    model.base_score_[k] = std::log((counts[k] + 0.5) / (static_cast<double>(n) + 0.5 * n_classes));
  }
  if (params.n_trees <= 0 || n == 0) return model;

  const auto bins = detail::BinnedFeatures::build(x, params.max_bins);
  detail::TreeBuilder builder(bins, params);
  Rng rng(params.seed);

  std::vector<double> scores(n * k_classes);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(model.base_score_.begin(), model.base_score_.end(), scores.begin() + i * k_classes);
  }
  std::vector<double> prob(k_classes);
  std::vector<std::vector<double>> grad(k_classes, std::vector<double>(n));
  std::vector<std::vector<double>> hess(k_classes, std::vector<double>(n));
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> all_features(x.cols());
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});
  const auto n_cols = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.colsample * static_cast<double>(x.cols()))));
  const auto n_sub = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.subsample * static_cast<double>(n))));

  for (int round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(scores.begin() + i * k_classes, k_classes, prob.begin());
      softmax_inplace(prob);
      for (std::size_t k = 0; k < k_classes; ++k) {
        const double target = y[i] == static_cast<int>(k) ? 1.0 : 0.0;
        grad[k][i] = prob[k] - target;
        hess[k][i] = std::max(prob[k] * (1.0 - prob[k]), 1e-6);
      }
    }
    std::vector<std::size_t> rows = all;
    if (n_sub < n) {
      rng.shuffle(std::span<std::size_t>(rows));
      rows.resize(n_sub);
      std::sort(rows.begin(), rows.end());
    }
    std::vector<std::size_t> features = all_features;
    if (n_cols < features.size()) {
      rng.shuffle(std::span<std::size_t>(features));
      features.resize(n_cols);
      std::sort(features.begin(), features.end());
    }
    for (std::size_t k = 0; k < k_classes; ++k) {
      auto tree = builder.build(grad[k], hess[k], rows, features);
      for (std::size_t i = 0; i < n; ++i) scores[i * k_classes + k] += tree.predict(x.row(i));
      model.trees_.push_back(std::move(tree));
    }
  }
  return model;
}

}  // namespace keytrace::learn
