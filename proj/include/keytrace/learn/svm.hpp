#pragma once

// Kernel max-margin classifier. Each binary problem is solved in the dual
// with SMO using second-order working-set selection; the multiclass model is
// one-vs-rest over the decision values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dense.hpp"

namespace keytrace::learn {

enum class Kernel { Linear, Rbf };

struct SvmParams {
  double c = 1.0;
  Kernel kernel = Kernel::Rbf;
  double gamma = 0.1;
  double tolerance = 1e-3;
  long max_iterations = 200000;
};

inline double kernel_value(Kernel k, double gamma, std::span<const double> a,
                           std::span<const double> b) {
  if (k == Kernel::Linear) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

struct BinarySvm {
  std::vector<std::size_t> support;  // indices into the shared support set
  std::vector<double> coef;          // alpha_i * y_i
  double rho = 0.0;
};

namespace detail {

// min 0.5 a'Qa - e'a  s.t. 0 <= a <= C, y'a = 0, with Q = y_i y_j K_ij.
inline BinarySvm solve_binary(const std::vector<double>& kernel, std::size_t n,
                              std::span<const int> y, const SvmParams& p) {
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto Q = [&](std::size_t i, std::size_t j) {
    return static_cast<double>(y[i] * y[j]) * kernel[i * n + j];
  };
  const double C = p.c;
  const double tau = 1e-12;
  auto in_up = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0);
  };
  auto in_low = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C);
  };

  for (long iter = 0; iter < p.max_iterations; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_up(t)) continue;
      const double v = -y[t] * grad[t];
      if (v > gmax) {
        gmax = v;
        i = t;
      }
    }
    if (i == n) break;

    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      const double b = gmax - v;
      if (b <= 0) continue;
      double a = Q(i, i) + Q(t, t) - 2.0 * y[i] * y[t] * Q(i, t);
      if (a <= 0) a = tau;
      const double obj = -(b * b) / a;
      if (obj < best) {
        best = obj;
        j = t;
      }
    }
    if (j == n || gmax - gmin < p.tolerance) break;

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += Q(t, i) * dai + Q(t, j) * daj;
  }

  // rho from free vectors, or the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  BinarySvm out;
  if (n_free > 0) {
    out.rho = sum_free / n_free;
  } else if (std::isfinite(ub) && std::isfinite(lb)) {
    out.rho = 0.5 * (ub + lb);
  } else {
    out.rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      out.support.push_back(t);
      out.coef.push_back(alpha[t] * y[t]);
    }
  }
  return out;
}

}  // namespace detail

class SvmModel {
 public:
  static SvmModel fit(const Dense& x, std::span<const int> y, int n_classes,
                      const SvmParams& params) {
    const auto n = x.rows();
    std::vector<double> kernel(n * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double v = kernel_value(params.kernel, params.gamma, x.row(i), x.row(j));
        kernel[i * n + j] = v;
        kernel[j * n + i] = v;
      }
    }
    SvmModel m;
    m.params_ = params;
    std::vector<bool> used(n, false);
    std::vector<BinarySvm> raw;
    for (int k = 0; k < n_classes; ++k) {
      std::vector<int> yk(n);
      bool any_pos = false;
      for (std::size_t i = 0; i < n; ++i) {
        yk[i] = y[i] == k ? 1 : -1;
        any_pos = any_pos || yk[i] > 0;
      }
      BinarySvm b;
      if (any_pos) {
        b = detail::solve_binary(kernel, n, yk, params);
      } else {
        b.rho = 1.0;  // absent class: constant negative decision
      }
      for (auto s : b.support) used[s] = true;
      raw.push_back(std::move(b));
    }
    // compact the support vectors shared by all binary machines
    std::vector<std::size_t> remap(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!used[i]) continue;
      remap[i] = m.support_vectors_.size();
      m.support_vectors_.emplace_back(x.row(i).begin(), x.row(i).end());
    }
    for (auto& b : raw) {
      for (auto& s : b.support) s = remap[s];
      m.machines_.push_back(std::move(b));
    }
    return m;
  }

  std::vector<double> decision_values(std::span<const double> x) const {
    std::vector<double> kx(support_vectors_.size());
    for (std::size_t s = 0; s < kx.size(); ++s) {
      kx[s] = kernel_value(params_.kernel, params_.gamma, support_vectors_[s], x);
    }
    std::vector<double> d;
    d.reserve(machines_.size());
    for (const auto& m : machines_) {
      double v = -m.rho;
      for (std::size_t t = 0; t < m.support.size(); ++t) v += m.coef[t] * kx[m.support[t]];
      d.push_back(v);
    }
    return d;
  }

  // softmax of one-vs-rest decision values
  std::vector<double> predict_proba(std::span<const double> x) const {
    auto d = decision_values(x);
    softmax_inplace(d);
    return d;
  }

  std::size_t support_vector_count() const { return support_vectors_.size(); }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["support_vectors"] = support_vectors_;
    auto& ms = j["machines"] = nlohmann::json::array();
    for (const auto& m : machines_) {
      ms.push_back({{"support", m.support}, {"coef", m.coef}, {"rho", m.rho}});
    }
    return j;
  }

  static SvmModel from_json(const nlohmann::json& j, const SvmParams& params) {
    SvmModel m;
    m.params_ = params;
    m.support_vectors_ = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    for (const auto& b : j.at("machines")) {
      m.machines_.push_back({b.at("support").get<std::vector<std::size_t>>(),
                             b.at("coef").get<std::vector<double>>(), b.at("rho").get<double>()});
    }
    return m;
  }

 private:
  SvmParams params_;
  std::vector<std::vector<double>> support_vectors_;
  std::vector<BinarySvm> machines_;
};

}  // namespace keytrace::learn
