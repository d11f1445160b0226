#pragma once

// Feedforward net: one ReLU hidden layer, softmax output, cross-entropy
// loss, mini-batch Adam updates.

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

struct MlpParams {
  int hidden = 64;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

class MlpModel {
 public:
  static MlpModel fit(const Dense& x, std::span<const int> y, int n_classes,
                      const MlpParams& params);

  std::vector<double> predict_proba(std::span<const double> x) const {
    std::vector<double> hidden(hidden_);
    forward(x, hidden);
    std::vector<double> out(classes_);
    output(hidden, out);
    softmax_inplace(out);
    return out;
  }

  nlohmann::json to_json() const {
    return {{"inputs", inputs_}, {"hidden", hidden_}, {"classes", classes_},
            {"w1", w1_},         {"b1", b1_},         {"w2", w2_},
            {"b2", b2_}};
  }

  static MlpModel from_json(const nlohmann::json& j) {
    MlpModel m;
    m.inputs_ = j.at("inputs").get<std::size_t>();
    m.hidden_ = j.at("hidden").get<std::size_t>();
    m.classes_ = j.at("classes").get<std::size_t>();
    m.w1_ = j.at("w1").get<std::vector<double>>();
    m.b1_ = j.at("b1").get<std::vector<double>>();
    m.w2_ = j.at("w2").get<std::vector<double>>();
    m.b2_ = j.at("b2").get<std::vector<double>>();
    return m;
  }

 private:
  void forward(std::span<const double> x, std::span<double> h) const {
    for (std::size_t u = 0; u < hidden_; ++u) {
      const double* w = w1_.data() + u * inputs_;
      double s = b1_[u];
      for (std::size_t i = 0; i < inputs_; ++i) s += w[i] * x[i];
      h[u] = s > 0.0 ? s : 0.0;
    }
  }

  void output(std::span<const double> h, std::span<double> z) const {
    for (std::size_t k = 0; k < classes_; ++k) {
      const double* w = w2_.data() + k * hidden_;
      double s = b2_[k];
      for (std::size_t u = 0; u < hidden_; ++u) s += w[u] * h[u];
      z[k] = s;
    }
  }

  std::size_t inputs_ = 0;
  std::size_t hidden_ = 0;
  std::size_t classes_ = 0;
  std::vector<double> w1_, b1_, w2_, b2_;
};

namespace detail {

struct Adam {
  std::vector<double> m, v;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

  void step(std::vector<double>& w, const std::vector<double>& g, double lr, long t) {
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

}  // namespace detail

inline MlpModel MlpModel::fit(const Dense& x, std::span<const int> y, int n_classes,
                              const MlpParams& params) {
  MlpModel m;
  m.inputs_ = x.cols();
  m.hidden_ = static_cast<std::size_t>(std::max(1, params.hidden));
  m.classes_ = static_cast<std::size_t>(n_classes);
  const auto d = m.inputs_, H = m.hidden_, K = m.classes_;

  Rng rng(params.seed);
  m.w1_.resize(H * d);
  m.b1_.assign(H, 0.0);
  m.w2_.resize(K * H);
  m.b2_.assign(K, 0.0);
  const double s1 = std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(d, 1)));
  const double s2 = std::sqrt(1.0 / static_cast<double>(H));
  for (auto& w : m.w1_) w = rng.normal(0.0, s1);
  for (auto& w : m.w2_) w = rng.normal(0.0, s2);

  detail::Adam a_w1(m.w1_.size()), a_b1(H), a_w2(m.w2_.size()), a_b2(K);
  std::vector<double> g_w1(m.w1_.size()), g_b1(H), g_w2(m.w2_.size()), g_b2(K);
  std::vector<double> hidden(H), z(K), dz(K), dh(H);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(std::max(1, params.batch_size));
  long step = 0;

  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto end = std::min(order.size(), start + batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::fill(g_w1.begin(), g_w1.end(), 0.0);
      std::fill(g_b1.begin(), g_b1.end(), 0.0);
      std::fill(g_w2.begin(), g_w2.end(), 0.0);
      std::fill(g_b2.begin(), g_b2.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto i = order[b];
        const auto xi = x.row(i);
        m.forward(xi, hidden);
        m.output(hidden, z);
        softmax_inplace(z);
        for (std::size_t k = 0; k < K; ++k) {
          dz[k] = (z[k] - (y[i] == static_cast<int>(k) ? 1.0 : 0.0)) * inv;
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k) {
          g_b2[k] += dz[k];
          double* gw = g_w2.data() + k * H;
          const double* w = m.w2_.data() + k * H;
          for (std::size_t u = 0; u < H; ++u) {
            gw[u] += dz[k] * hidden[u];
            dh[u] += dz[k] * w[u];
          }
        }
        for (std::size_t u = 0; u < H; ++u) {
          if (hidden[u] <= 0.0) continue;
          g_b1[u] += dh[u];
          double* gw = g_w1.data() + u * d;
          for (std::size_t j = 0; j < d; ++j) gw[j] += dh[u] * xi[j];
        }
      }
      for (std::size_t t = 0; t < g_w1.size(); ++t) g_w1[t] += params.l2 * m.w1_[t];
      for (std::size_t t = 0; t < g_w2.size(); ++t) g_w2[t] += params.l2 * m.w2_[t];
      ++step;
      a_w1.step(m.w1_, g_w1, params.learning_rate, step);
      a_b1.step(m.b1_, g_b1, params.learning_rate, step);
      a_w2.step(m.w2_, g_w2, params.learning_rate, step);
      a_b2.step(m.b2_, g_b2, params.learning_rate, step);
    }
  }
  return m;
}

}  // namespace keytrace::learn
