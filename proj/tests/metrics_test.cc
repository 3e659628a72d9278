#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "logitdyn/errors.h"
#include "logitdyn/metrics.h"
#include "oracles.h"

namespace logitdyn {
namespace {

double Ap(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
  return AveragePrecision(s, y).aucpr;
}

TEST(AveragePrecision, PerfectRanking) {
  EXPECT_DOUBLE_EQ(Ap({0.9, 0.8, 0.1, 0.0}, {1, 1, 0, 0}), 1.0);
}

TEST(AveragePrecision, HandWalkedExample) {
  EXPECT_NEAR(Ap({0.9, 0.8, 0.7}, {1, 0, 1}), 0.5 + 0.5 * (2.0 / 3.0), 1e-15);
}

TEST(AveragePrecision, TiedBlockIsOneStep) {
  EXPECT_DOUBLE_EQ(Ap({0.5, 0.5}, {1, 0}), 0.5);
  EXPECT_DOUBLE_EQ(Ap({0.5, 0.5}, {0, 1}), 0.5);
}

TEST(AveragePrecision, ReportsCounts) {
  const auto r = AveragePrecision(std::vector<double>{1, 2, 3, 4, 5},
                                  std::vector<std::uint8_t>{0, 1, 0, 0, 1});
  EXPECT_EQ(r.n_pos, 2u);
  EXPECT_EQ(r.n_neg, 3u);
  EXPECT_DOUBLE_EQ(r.base_rate, 0.4);
}

TEST(AveragePrecision, RejectsDegenerateInput) {
  EXPECT_THROW(Ap({1, 2}, {1, 1}), DataError);
  EXPECT_THROW(Ap({1, 2}, {0, 0}), DataError);
  EXPECT_THROW(Ap({}, {}), DataError);
  EXPECT_THROW(Ap({1, NAN}, {0, 1}), DataError);
  EXPECT_THROW(Ap({1, 2, 3}, {0, 1}), DataError);
}

TEST(AveragePrecision, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 2 + rng() % 11;
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    // Coarse scores force ties.
    for (auto& v : s) v = static_cast<double>(rng() % 5) / 4.0;
    for (auto& v : y) v = rng() % 2;
    y[0] = 1;
    y[1] = 0;
    ASSERT_NEAR(Ap(s, y), oracle::AveragePrecision(s, y), 1e-12) << "trial " << t;
  }
}

TEST(AveragePrecision, InvariantToIncreasingTransform) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 30;
    std::vector<double> s(n), g(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(normal(rng) * 3.0);
      g[i] = std::exp(s[i]) * 7.0 - 3.0;
      y[i] = rng() % 2;
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_NEAR(Ap(s, y), Ap(g, y), 1e-12);
  }
}

TEST(AveragePrecision, FlippedProblemMatchesOracle) {
  // Negated scores rank the complementary class; both orientations must
  // agree with the brute-force construction.
  std::mt19937_64 rng(6);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 11;
    std::vector<double> s(n), neg(n);
    std::vector<std::uint8_t> y(n), flip(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 6);
      neg[i] = -s[i];
      y[i] = rng() % 2;
    }
    y[0] = 1;
    y[1] = 0;
    for (std::size_t i = 0; i < n; ++i) flip[i] = 1 - y[i];
    EXPECT_NEAR(Ap(neg, flip), oracle::AveragePrecision(neg, flip), 1e-12);
    // All-tied scores give exactly the base rate in either orientation.
    std::vector<double> flat(n, 1.0);
    const double base = static_cast<double>(std::count(y.begin(), y.end(), 1)) /
                        static_cast<double>(n);
    EXPECT_NEAR(Ap(flat, y), base, 1e-15);
    EXPECT_NEAR(Ap(flat, flip), 1.0 - base, 1e-15);
  }
}

TEST(AveragePrecision, RandomScoresNearBaseRate) {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u;
  const std::size_t n = 10000;
  std::vector<double> s(n);
  std::vector<std::uint8_t> y(n, 0);
  for (std::size_t i = 0; i < n / 5; ++i) y[i] = 1;
  for (auto& v : s) v = u(rng);
  const double ap = Ap(s, y);
  EXPECT_GE(ap, 0.18);
  EXPECT_LE(ap, 0.22);
}

TEST(MisclassificationRate, Extremes) {
  const auto right = TrajectoryDataset::FromLogits(2, 1, {1, 0, 0, 1}, {0, 1});
  EXPECT_EQ(MisclassificationRate(right), 0.0);
  const auto wrong = TrajectoryDataset::FromLogits(2, 1, {1, 0, 0, 1}, {1, 0});
  EXPECT_EQ(MisclassificationRate(wrong), 1.0);
}

}  // namespace
}  // namespace logitdyn
