#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include <keytrace/experiment.hpp>
#include <keytrace/rhythmic.hpp>
#include <keytrace/stats.hpp>

using namespace keytrace;

namespace {

// Order statistic by selection rather than a full sort.
double oracle_quantile(std::vector<double> v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 == v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

double oracle_std(const std::vector<double>& v) {
  long double m = 0;
  for (double x : v) m += x;
  m /= v.size();
  long double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return static_cast<double>(std::sqrt(ss / v.size()));
}

}  // namespace

TEST(Summarize5, OneToFive) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto s = stats::summarize5(v);
  EXPECT_DOUBLE_EQ(s.q1, 2);
  EXPECT_DOUBLE_EQ(s.median, 3);
  EXPECT_DOUBLE_EQ(s.q3, 4);
  EXPECT_DOUBLE_EQ(s.mean, 3);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(2.0));
}

TEST(Summarize5, SingleAndEmpty) {
  const std::vector<double> one{7};
  EXPECT_EQ(stats::summarize5(one).as_array(), (std::array<double, 5>{7, 7, 7, 7, 0}));
  for (double v : stats::summarize5({}).as_array()) EXPECT_TRUE(is_missing(v));
}

TEST(Summarize7, Examples) {
  const std::vector<double> two{2, 4};
  EXPECT_EQ(stats::summarize7(two).as_array(), (std::array<double, 7>{3, 1, 6, 2, 3, 2.5, 3.5}));
  const std::vector<double> five{5};
  EXPECT_EQ(stats::summarize7(five).as_array(), (std::array<double, 7>{5, 0, 5, 1, 5, 5, 5}));
  const auto e = stats::summarize7({});
  EXPECT_EQ(e.total, 0);
  EXPECT_EQ(e.count, 0);
  EXPECT_TRUE(is_missing(e.mean));
  EXPECT_TRUE(is_missing(e.median));
}

TEST(Summaries, RandomListsMatchOracle) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(static_cast<std::size_t>(rng.between(1, 60)));
    for (auto& x : v) x = rng.bernoulli(0.3) ? static_cast<double>(rng.between(0, 5)) : rng.uniform(0, 3000);
    const auto s5 = stats::summarize5(v);
    const auto s7 = stats::summarize7(v);
    EXPECT_NEAR(s5.q1, oracle_quantile(v, 0.25), 1e-9);
    EXPECT_NEAR(s5.median, oracle_quantile(v, 0.5), 1e-9);
    EXPECT_NEAR(s5.q3, oracle_quantile(v, 0.75), 1e-9);
    EXPECT_NEAR(s5.std, oracle_std(v), 1e-9);
    EXPECT_EQ(s7.count, static_cast<double>(v.size()));
    double total = 0;
    for (double x : v) total += x;
    EXPECT_NEAR(s7.total, total, 1e-9);
    EXPECT_NEAR(s7.mean, total / v.size(), 1e-9);
    EXPECT_EQ(s7.q1, s5.q1);
    EXPECT_EQ(s7.q3, s5.q3);
  }
}

TEST(Entropy, Examples) {
  const std::vector<double> four{100, 400, 700, 1000};
  EXPECT_DOUBLE_EQ(shannon_entropy(std::span<const double>(four), PauseBinning{}), 2.0);
  const std::vector<double> same{10, 20, 30};
  EXPECT_DOUBLE_EQ(shannon_entropy(std::span<const double>(same), PauseBinning{}), 0.0);
  EXPECT_DOUBLE_EQ(shannon_entropy(std::span<const double>(), PauseBinning{}), 0.0);
  // values at or below 3 ms fall outside every bin
  const std::vector<double> low{1, 3, 50};
  EXPECT_DOUBLE_EQ(shannon_entropy(std::span<const double>(low), PauseBinning{}), 0.0);
}

TEST(Entropy, RandomValuesMatchHistogramOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(1000);
    for (auto& x : v) x = rng.uniform(0, 4000);
    std::map<int, int> h;
    int n = 0;
    for (double x : v) {
      if (x <= 3) continue;
      const int b = x > 2400 ? 8 : static_cast<int>(std::ceil(x / 300.0)) - 1;
      ++h[b];
      ++n;
    }
    double e = 0;
    for (auto [b, c] : h) e -= (double(c) / n) * std::log2(double(c) / n);
    EXPECT_NEAR(shannon_entropy(std::span<const double>(v), PauseBinning{}), e, 1e-12);
  }
}

TEST(MutualInformation, IdentityFeatureGivesLabelEntropy) {
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 90; ++i) {
    x.push_back(i % 3);
    y.push_back(i % 3);
  }
  EXPECT_NEAR(mutual_information(x, y), std::log2(3.0), 1e-12);
}

TEST(MutualInformation, SmallInstanceByHand) {
  // 12 points, 2 bins: lower half {0..5}, upper half {6..11}
  const std::vector<double> x{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11};
  const std::vector<int> y{0, 0, 0, 0, 1, 1, 1, 1, 1, 2, 2, 2};
  // joint: bin0 -> {0:4, 1:2}, bin1 -> {1:3, 2:3}
  const double n = 12;
  auto term = [&](double c, double cx, double cy) { return c / n * std::log2(c * n / (cx * cy)); };
  const double expected = term(4, 6, 4) + term(2, 6, 5) + term(3, 6, 5) + term(3, 6, 3);
  EXPECT_NEAR(mutual_information(x, y, 2), expected, 1e-12);
}

TEST(MutualInformation, PermutedLabelsNearZero) {
  Rng rng(8);
  std::vector<double> x(600);
  std::vector<int> y(600);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.uniform();
    y[i] = static_cast<int>(i % 3);
  }
  rng.shuffle(std::span<int>(y));
  EXPECT_LT(mutual_information(x, y), 0.05);
}

TEST(MutualInformation, RandomMatchesJointHistogramOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(3, 80));
    std::vector<double> x(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.between(0, 20));
      y[i] = static_cast<int>(rng.below(3));
    }
    const int bins = 8;
    // bin = number of cut values <= x, cuts at sorted[k*n/bins]
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> px, py;
    for (std::size_t i = 0; i < n; ++i) {
      int b = 0;
      for (int k = 1; k < bins; ++k) b += s[k * n / bins] <= x[i];
      joint[{b, y[i]}] += 1;
      px[b] += 1;
      py[y[i]] += 1;
    }
    double mi = 0;
    for (auto [k, c] : joint) mi += c / n * std::log2(c * n / (px[k.first] * py[k.second]));
    EXPECT_NEAR(mutual_information(x, y, bins), std::max(mi, 0.0), 1e-9);
  }
}
