#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "support/oracles.hpp"
#include "tagdiag/statistics.hpp"

using namespace tagdiag;

namespace {

// Seven NER datasets in the order CN03 BC BN MZ WB NW TC.
const std::vector<double> kEcon{0.485, 0.486, 0.627, 0.496, 0.294, 0.567, 0.261};
const std::vector<double> kSeqGain{-0.14, 0.65, -0.50, 1.49, 5.61, 1.13, 2.39};
const std::vector<double> kCpreGain{0.72, 1.27, 0.39, 0.19, 7.26, 0.99, 6.00};

// Thirteen datasets: four CWS followed by the NER ones above, then CN00, PTB.
const std::vector<double> kSeqAll{0.27, 0.34, 0.18, 0.08, -0.14, 0.65, -0.50,
                                  1.49, 5.61, 1.13, 2.39, -0.08, 0.03};

double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto rx = testkit::counting_ranks(x), ry = testkit::counting_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(Ranks, AverageTies) {
  std::vector<double> v{10, 20, 20, 5};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, PublishedNerCells) {
  EXPECT_NEAR(spearman(kEcon, kSeqGain), -0.643, 5e-4);
  EXPECT_NEAR(spearman(kEcon, kCpreGain), -0.714, 5e-4);
}

TEST(Spearman, PerfectMonotone) {
  std::vector<double> x{1, 2, 3, 4, 5}, up{2, 4, 8, 16, 32}, down{9, 7, 5, 3, 1};
  EXPECT_DOUBLE_EQ(spearman(x, up), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, down), -1.0);
}

TEST(Spearman, Errors) {
  std::vector<double> a{1, 2}, b{1, 2}, c{1, 2, 3}, flat{1, 1, 1};
  EXPECT_THROW(spearman(a, b), error);
  EXPECT_THROW(spearman(a, c), error);
  try {
    spearman(c, flat);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), error_code::undefined);
  }
}

TEST(Spearman, PropertiesAgainstOracle) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> small(0, 6);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 3 + trial % 10;
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = small(rng);
    for (auto& v : y) v = small(rng);
    if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) continue;
    if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) continue;
    const double rho = spearman(x, y);
    ASSERT_NEAR(rho, oracle_spearman(x, y), 1e-12);
    ASSERT_NEAR(rho, spearman(y, x), 1e-12);
    std::vector<double> tx(n);
    for (std::size_t i = 0; i < n; ++i) tx[i] = std::exp(x[i]) * 3 - 7;  // strictly increasing map
    ASSERT_NEAR(spearman(tx, y), rho, 1e-12);
    ASSERT_GE(rho, -1.0);
    ASSERT_LE(rho, 1.0);
  }
}

TEST(Wilcoxon, SeqDeltasRankSum) {
  auto r = wilcoxon_signed_rank(kSeqAll);
  EXPECT_DOUBLE_EQ(r.w_minus, 14.5);
  EXPECT_DOUBLE_EQ(r.w_plus, 91 - 14.5);
  EXPECT_DOUBLE_EQ(r.statistic, 14.5);
  EXPECT_EQ(r.n, 13u);
  EXPECT_EQ(r.method, "exact");
  auto ranks = testkit::counting_ranks([] {
    std::vector<double> m;
    for (double d : kSeqAll) m.push_back(std::abs(d));
    return m;
  }());
  EXPECT_NEAR(r.p_value, testkit::brute_force_wilcoxon_p(ranks, r.w_plus, 0), 1e-12);
  auto g = wilcoxon_signed_rank(kSeqAll, sidedness::greater);
  EXPECT_NEAR(g.p_value, testkit::brute_force_wilcoxon_p(ranks, g.w_plus, 1), 1e-12);
  EXPECT_LT(g.p_value, r.p_value);
}

TEST(Wilcoxon, SymmetricPairsGiveNoEvidence) {
  std::vector<double> d{1, -1, 2, -2, 3, -3, 4, -4};
  auto r = wilcoxon_signed_rank(d);
  EXPECT_DOUBLE_EQ(r.w_plus, r.w_minus);
  EXPECT_NEAR(r.p_value, 1.0, 1e-12);
}

TEST(Wilcoxon, UndefinedCases) {
  std::vector<double> zeros(6, 0.0), few{1, 2, -3};
  try {
    wilcoxon_signed_rank(zeros);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), error_code::undefined);
    EXPECT_NE(std::string(e.what()).find("no signed information"), std::string::npos);
  }
  EXPECT_THROW(wilcoxon_signed_rank(few), error);
  EXPECT_NO_THROW(wilcoxon_signed_rank(few, sidedness::two_sided, test_method::exact, 1));
}

TEST(Wilcoxon, ExactMatchesEnumeration) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> mag(1, 6);
  std::bernoulli_distribution sign(0.6);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 5 + trial % 8;  // 5..12
    std::vector<double> d(n);
    for (auto& v : d) v = (sign(rng) ? 1.0 : -1.0) * mag(rng) * 0.25;
    std::vector<double> m;
    for (double v : d) m.push_back(std::abs(v));
    const auto ranks = testkit::counting_ranks(m);
    for (auto [side, code] : {std::pair{sidedness::two_sided, 0}, {sidedness::greater, 1},
                              {sidedness::less, -1}}) {
      auto r = wilcoxon_signed_rank(d, side, test_method::exact);
      ASSERT_NEAR(r.p_value, testkit::brute_force_wilcoxon_p(ranks, r.w_plus, code), 1e-12);
    }
  }
}

TEST(Wilcoxon, InvariantToRescalingAndNegation) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> noise(0.3, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> d(6 + trial % 20), scaled, neg;
    for (auto& v : d) v = noise(rng);
    for (double v : d) {
      scaled.push_back(v * 100);
      neg.push_back(-v);
    }
    auto a = wilcoxon_signed_rank(d);
    ASSERT_DOUBLE_EQ(wilcoxon_signed_rank(scaled).p_value, a.p_value);
    auto b = wilcoxon_signed_rank(neg);
    ASSERT_NEAR(b.p_value, a.p_value, 1e-12);
    ASSERT_DOUBLE_EQ(b.w_plus, a.w_minus);
    ASSERT_NEAR(wilcoxon_signed_rank(neg, sidedness::less).p_value,
                wilcoxon_signed_rank(d, sidedness::greater).p_value, 1e-12);
  }
}

TEST(Wilcoxon, NormalApproximationTracksExact) {
  std::vector<double> d;
  for (int i = 1; i <= 20; ++i) d.push_back(i % 3 == 0 ? -i : i);
  auto ex = wilcoxon_signed_rank(d, sidedness::two_sided, test_method::exact);
  auto na = wilcoxon_signed_rank(d, sidedness::two_sided, test_method::normal);
  EXPECT_EQ(na.method, "normal-approximation");
  EXPECT_NEAR(na.p_value, ex.p_value, 0.01);
}

TEST(Bootstrap, ConstantStatisticHasZeroWidth) {
  std::vector<double> units(50, 3.0);
  auto mean = [](std::span<const double> s) {
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  };
  auto ci = bootstrap_ci<double>(units, mean, 200, 0.95, 1);
  EXPECT_DOUBLE_EQ(ci.lower, 3.0);
  EXPECT_DOUBLE_EQ(ci.upper, 3.0);
  EXPECT_DOUBLE_EQ(ci.estimate, 3.0);
}

TEST(Bootstrap, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::vector<double> units(100);
  for (auto& v : units) v = g(rng);
  auto mean = [](std::span<const double> s) {
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
  };
  auto a = bootstrap_ci<double>(units, mean, 1000, 0.95, 17, 1);
  auto b = bootstrap_ci<double>(units, mean, 1000, 0.95, 17, 4);
  auto c = bootstrap_ci<double>(units, mean, 1000, 0.95, 18, 1);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, b.upper);
  EXPECT_NE(a.lower, c.lower);
  EXPECT_LT(a.lower, a.estimate);
  EXPECT_GT(a.upper, a.estimate);
}

TEST(Bootstrap, RejectsBadArguments) {
  std::vector<double> units{1, 2, 3}, none;
  auto first = [](std::span<const double> s) { return s[0]; };
  EXPECT_THROW(bootstrap_ci<double>(units, first, 99, 0.95, 1), error);
  EXPECT_THROW(bootstrap_ci<double>(units, first, 100, 1.0, 1), error);
  EXPECT_THROW(bootstrap_ci<double>(none, first, 100, 0.95, 1), error);
}

TEST(Quantile, LinearInterpolation) {
  std::vector<double> s{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.0), 1);
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 1.0), 4);
  EXPECT_DOUBLE_EQ(sorted_quantile(s, 0.5), 2.5);
}
