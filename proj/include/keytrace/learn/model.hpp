#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "../feature_matrix.hpp"
#include "../keylog.hpp"
#include "../rng.hpp"
#include "dense.hpp"
#include "gbt.hpp"
#include "mlp.hpp"
#include "svm.hpp"

namespace keytrace::learn {

enum class ClassifierFamily { FeedforwardNet, MaxMarginKernel, GradientBoostedTrees };

inline std::string_view classifier_name(ClassifierFamily f) {
  switch (f) {
    case ClassifierFamily::FeedforwardNet: return "mlp";
    case ClassifierFamily::MaxMarginKernel: return "svm";
    case ClassifierFamily::GradientBoostedTrees: return "gbt";
  }
  return "?";
}

inline ClassifierFamily parse_classifier(std::string_view s) {
  if (s == "mlp") return ClassifierFamily::FeedforwardNet;
  if (s == "svm") return ClassifierFamily::MaxMarginKernel;
  if (s == "gbt") return ClassifierFamily::GradientBoostedTrees;
  throw Error("unknown classifier '" + std::string(s) + "' (expected mlp|svm|gbt)");
}

using HyperValue = std::variant<std::int64_t, double, std::string>;

inline std::string hyper_to_string(const HyperValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

inline nlohmann::json hyper_to_json(const HyperValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

inline HyperValue hyper_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number()) return j.get<double>();
  return j.get<std::string>();
}

struct ClassifierSpec {
  ClassifierFamily family = ClassifierFamily::GradientBoostedTrees;
  std::map<std::string, HyperValue> params;
  std::uint64_t seed = 0;

  std::int64_t get_int(const std::string& name, std::int64_t fallback) const {
    auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* d = std::get_if<double>(&it->second)) return std::llround(*d);
    return std::get<std::int64_t>(it->second);
  }

  double get_real(const std::string& name, double fallback) const {
    auto it = params.find(name);
    if (it == params.end()) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
    return std::get<double>(it->second);
  }

  std::string get_string(const std::string& name, const std::string& fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : std::get<std::string>(it->second);
  }

  // canonical text form, e.g. gbt{learning_rate=0.1,max_depth=4}
  std::string describe() const {
    std::string s(classifier_name(family));
    s += '{';
    bool first = true;
    for (const auto& [k, v] : params) {
      if (!first) s += ',';
      first = false;
      s += k + "=" + hyper_to_string(v);
    }
    return s + '}';
  }

  nlohmann::json to_json() const {
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [k, v] : params) p[k] = hyper_to_json(v);
    return {{"family", classifier_name(family)}, {"params", p}, {"seed", seed}};
  }

  static ClassifierSpec from_json(const nlohmann::json& j) {
    ClassifierSpec s;
    s.family = parse_classifier(j.at("family").get<std::string>());
    for (const auto& [k, v] : j.at("params").items()) s.params[k] = hyper_from_json(v);
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  }

  friend bool operator==(const ClassifierSpec&, const ClassifierSpec&) = default;
};

// ---------------------------------------------------------------------------
// Search spaces

enum class GeneKind { Integer, Real, LogReal, Discrete };

struct Gene {
  std::string name;
  GeneKind kind = GeneKind::Real;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<HyperValue> levels;  // Discrete only

  // u in [0, 1]
  HyperValue decode(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    switch (kind) {
      case GeneKind::Integer: {
        const auto span = static_cast<std::int64_t>(hi - lo);
        const auto k = std::min(static_cast<std::int64_t>(std::floor(u * static_cast<double>(span + 1))), span);
        return static_cast<std::int64_t>(lo) + k;
      }
      case GeneKind::Real: return lo + u * (hi - lo);
      case GeneKind::LogReal: return std::exp(std::log(lo) + u * (std::log(hi) - std::log(lo)));
      case GeneKind::Discrete: {
        const auto n = levels.size();
        const auto k = std::min(static_cast<std::size_t>(std::floor(u * static_cast<double>(n))), n - 1);
        return levels[k];
      }
    }
    return 0.0;
  }

  bool contains(const HyperValue& v) const {
    if (kind == GeneKind::Discrete) return std::find(levels.begin(), levels.end(), v) != levels.end();
    double x = 0.0;
    if (const auto* i = std::get_if<std::int64_t>(&v)) {
      x = static_cast<double>(*i);
    } else if (const auto* d = std::get_if<double>(&v)) {
      if (kind == GeneKind::Integer) return false;
      x = *d;
    } else {
      return false;
    }
    const double slack = 1e-9 * std::max(1.0, std::abs(hi));
    return x >= lo - slack && x <= hi + slack;
  }

  std::size_t cardinality() const {
    if (kind == GeneKind::Discrete) return levels.size();
    if (kind == GeneKind::Integer) return static_cast<std::size_t>(hi - lo) + 1;
    return 0;  // continuous
  }
};

struct SearchSpace {
  ClassifierFamily family;
  std::vector<Gene> genes;

  ClassifierSpec decode(std::span<const double> genome, std::uint64_t seed) const {
    ClassifierSpec s;
    s.family = family;
    s.seed = seed;
    for (std::size_t g = 0; g < genes.size(); ++g) s.params[genes[g].name] = genes[g].decode(genome[g]);
    return s;
  }

  bool contains(const ClassifierSpec& spec) const {
    if (spec.family != family) return false;
    for (const auto& g : genes) {
      auto it = spec.params.find(g.name);
      if (it == spec.params.end() || !g.contains(it->second)) return false;
    }
    return true;
  }

  // Every point of a fully discrete space; throws for continuous genes.
  std::vector<ClassifierSpec> grid(std::uint64_t seed) const {
    std::vector<ClassifierSpec> out{ClassifierSpec{family, {}, seed}};
    for (const auto& g : genes) {
      const auto n = g.cardinality();
      if (n == 0) throw Error("grid enumeration needs discrete genes ('" + g.name + "' is continuous)");
      std::vector<ClassifierSpec> next;
      for (const auto& base : out) {
        for (std::size_t k = 0; k < n; ++k) {
          auto s = base;
          s.params[g.name] = g.kind == GeneKind::Discrete
                                 ? g.levels[k]
                                 : HyperValue{static_cast<std::int64_t>(g.lo) + static_cast<std::int64_t>(k)};
          next.push_back(std::move(s));
        }
      }
      out = std::move(next);
    }
    return out;
  }
};

inline SearchSpace default_search_space(ClassifierFamily family) {
  switch (family) {
    case ClassifierFamily::FeedforwardNet:
      return {family,
              {{"hidden", GeneKind::Integer, 16, 256, {}},
               {"learning_rate", GeneKind::LogReal, 1e-4, 1e-1, {}},
               {"epochs", GeneKind::Integer, 50, 500, {}}}};
    case ClassifierFamily::MaxMarginKernel:
      return {family,
              {{"c", GeneKind::LogReal, 1e-2, 1e3, {}},
               {"kernel", GeneKind::Discrete, 0, 0, {std::string("linear"), std::string("rbf")}},
               {"gamma", GeneKind::LogReal, 1e-4, 1e1, {}}}};
    case ClassifierFamily::GradientBoostedTrees:
      return {family,
              {{"n_trees", GeneKind::Integer, 50, 600, {}},
               {"max_depth", GeneKind::Integer, 2, 8, {}},
               {"learning_rate", GeneKind::LogReal, 0.01, 0.4, {}},
               {"subsample", GeneKind::Real, 0.5, 1.0, {}}}};
  }
  return {family, {}};
}

// Reasonable untuned settings for each family.
inline ClassifierSpec default_spec(ClassifierFamily family, std::uint64_t seed = 0) {
  ClassifierSpec s{family, {}, seed};
  switch (family) {
    case ClassifierFamily::FeedforwardNet:
      s.params = {{"hidden", std::int64_t{64}}, {"learning_rate", 1e-3}, {"epochs", std::int64_t{150}}};
      break;
    case ClassifierFamily::MaxMarginKernel:
      s.params = {{"c", 1.0}, {"kernel", std::string("rbf")}, {"gamma", 0.01}};
      break;
    case ClassifierFamily::GradientBoostedTrees:
      s.params = {{"n_trees", std::int64_t{150}},
                  {"max_depth", std::int64_t{3}},
                  {"learning_rate", 0.1},
                  {"subsample", 0.8}};
      break;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Trained models

inline constexpr std::string_view kModelFormat = "keytrace-model";
inline constexpr int kModelFormatVersion = 1;

inline GbtParams gbt_params(const ClassifierSpec& s) {
  GbtParams p;
  p.n_trees = static_cast<int>(s.get_int("n_trees", p.n_trees));
  p.max_depth = static_cast<int>(s.get_int("max_depth", p.max_depth));
  p.learning_rate = s.get_real("learning_rate", p.learning_rate);
  p.subsample = s.get_real("subsample", p.subsample);
  p.colsample = s.get_real("colsample", p.colsample);
  p.lambda = s.get_real("lambda", p.lambda);
  p.min_child_weight = s.get_real("min_child_weight", p.min_child_weight);
  p.seed = mix_seed(s.seed, 1);
  return p;
}

inline SvmParams svm_params(const ClassifierSpec& s) {
  SvmParams p;
  p.c = s.get_real("c", p.c);
  p.kernel = s.get_string("kernel", "rbf") == "linear" ? Kernel::Linear : Kernel::Rbf;
  p.gamma = s.get_real("gamma", p.gamma);
  return p;
}

inline MlpParams mlp_params(const ClassifierSpec& s) {
  MlpParams p;
  p.hidden = static_cast<int>(s.get_int("hidden", p.hidden));
  p.learning_rate = s.get_real("learning_rate", p.learning_rate);
  p.epochs = static_cast<int>(s.get_int("epochs", p.epochs));
  p.batch_size = static_cast<int>(s.get_int("batch_size", p.batch_size));
  p.seed = mix_seed(s.seed, 2);
  return p;
}

struct Prediction {
  std::vector<int> labels;
  std::vector<std::vector<double>> scores;  // per row, one score per class
};

class TrainedModel {
 public:
  using Impl = std::variant<MlpModel, SvmModel, GbtModel>;

  TrainedModel(ClassifierSpec spec, std::vector<std::string> features,
               std::optional<Standardizer> standardizer, Impl impl)
      : spec_(std::move(spec)),
        features_(std::move(features)),
        standardizer_(std::move(standardizer)),
        impl_(std::move(impl)) {}

  const ClassifierSpec& spec() const { return spec_; }
  const std::vector<std::string>& feature_names() const { return features_; }
  std::size_t input_width() const { return features_.size(); }

  std::vector<double> scores(std::span<const double> x) const {
    return std::visit([&](const auto& m) { return m.predict_proba(x); }, impl_);
  }

  Prediction predict(const Dense& x) const {
    if (x.rows() == 0) return {};
    if (x.cols() != input_width()) {
      throw Error("feature width mismatch: model expects " + std::to_string(input_width()) +
                  " columns, got " + std::to_string(x.cols()));
    }
    Prediction p;
    const Dense z = standardizer_ ? standardizer_->apply(x) : x;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto s = scores(z.row(i));
      p.labels.push_back(argmax(s));
      p.scores.push_back(std::move(s));
    }
    return p;
  }

  Prediction predict(const FeatureMatrix& m) const {
    if (m.column_names != features_) {
      if (m.column_count() != input_width()) {
        throw Error("feature width mismatch: model expects " + std::to_string(input_width()) +
                    " columns, got " + std::to_string(m.column_count()));
      }
      throw Error("feature names differ from those the model was trained on");
    }
    return predict(Dense::from_rows(m.rows));
  }

  std::string serialize() const {
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["version"] = kModelFormatVersion;
    j["spec"] = spec_.to_json();
    j["features"] = features_;
    j["class_order"] = {scenario_name(Scenario::BonaFide), scenario_name(Scenario::Paraphrased),
                        scenario_name(Scenario::Transcribed)};
    if (standardizer_) {
      j["standardizer"] = {{"mean", standardizer_->mean}, {"scale", standardizer_->scale}};
    }
    j["params"] = std::visit([](const auto& m) { return m.to_json(); }, impl_);
    return j.dump();
  }

  static TrainedModel deserialize(std::string_view text) {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != kModelFormat) throw Error("not a keytrace model artifact");
    if (j.value("version", 0) != kModelFormatVersion) {
      throw Error("unsupported model artifact version " + std::to_string(j.value("version", 0)));
    }
    auto spec = ClassifierSpec::from_json(j.at("spec"));
    std::optional<Standardizer> st;
    if (j.contains("standardizer")) {
      st = Standardizer{j["standardizer"].at("mean").get<std::vector<double>>(),
                        j["standardizer"].at("scale").get<std::vector<double>>()};
    }
    Impl impl = [&]() -> Impl {
      switch (spec.family) {
        case ClassifierFamily::FeedforwardNet: return MlpModel::from_json(j.at("params"));
        case ClassifierFamily::MaxMarginKernel:
          return SvmModel::from_json(j.at("params"), svm_params(spec));
        case ClassifierFamily::GradientBoostedTrees: return GbtModel::from_json(j.at("params"));
      }
      throw Error("unknown classifier family");
    }();
    return TrainedModel(std::move(spec), j.at("features").get<std::vector<std::string>>(),
                        std::move(st), std::move(impl));
  }

 private:
  ClassifierSpec spec_;
  std::vector<std::string> features_;
  std::optional<Standardizer> standardizer_;
  Impl impl_;
};

inline bool uses_standardization(ClassifierFamily f) {
  return f != ClassifierFamily::GradientBoostedTrees;
}

/// Deterministic for a given spec (including its seed) and data.
inline TrainedModel fit(const ClassifierSpec& spec, const Dense& x, std::span<const int> y,
                        std::vector<std::string> feature_names = {}) {
  if (x.rows() != y.size()) throw Error("row/label count mismatch");
  for (double v : x.data()) {
    if (is_missing(v)) throw Error("training data contains missing values");
  }
  std::set<int> classes;
  for (int label : y) {
    if (label < 0 || label >= kNumClasses) throw Error("label out of range");
    classes.insert(label);
  }
  if (classes.size() < 2) throw Error("degenerate training data: fewer than two classes present");
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) feature_names.push_back("f" + std::to_string(j));
  }
  if (feature_names.size() != x.cols()) throw Error("feature name count does not match width");

  std::optional<Standardizer> st;
  if (uses_standardization(spec.family)) st = Standardizer::fit(x);
  const Dense z = st ? st->apply(x) : x;

  TrainedModel::Impl impl = [&]() -> TrainedModel::Impl {
    switch (spec.family) {
      case ClassifierFamily::FeedforwardNet:
        return MlpModel::fit(z, y, kNumClasses, mlp_params(spec));
      case ClassifierFamily::MaxMarginKernel:
        return SvmModel::fit(z, y, kNumClasses, svm_params(spec));
      case ClassifierFamily::GradientBoostedTrees:
        return GbtModel::fit(z, y, kNumClasses, gbt_params(spec));
    }
    throw Error("unknown classifier family");
  }();
  return TrainedModel(spec, std::move(feature_names), std::move(st), std::move(impl));
}

inline TrainedModel fit(const ClassifierSpec& spec, const FeatureMatrix& m) {
  return fit(spec, Dense::from_rows(m.rows), m.labels(), m.column_names);
}

inline Prediction predict(const TrainedModel& model, const FeatureMatrix& m) {
  return model.predict(m);
}

inline Prediction predict(const TrainedModel& model, const Dense& x) { return model.predict(x); }

}  // namespace keytrace::learn
