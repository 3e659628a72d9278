#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "logitdyn/errors.h"
#include "logitdyn/metrics.h"
#include "logitdyn/optim.h"
#include "logitdyn/probe.h"
#include "logitdyn/splits.h"

namespace logitdyn {
namespace {

FeatureMatrix Matrix(const std::vector<std::vector<double>>& rows,
                     const std::vector<std::uint8_t>& labels) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < rows.front().size(); ++j) {
    names.push_back("f" + std::to_string(j));
  }
  FeatureMatrix m(rows.size(), names);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m.at(i, j) = rows[i][j];
  }
  m.labels() = labels;
  return m;
}

// Noisy two-feature problem where feature 0 carries the error signal.
FeatureMatrix Noisy(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> rows(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 4 == 0;
    rows[i] = {normal(rng) + 1.5 * y[i], 3.0 * normal(rng) + 10.0};
  }
  return Matrix(rows, y);
}

TEST(Standardizer, ConstantColumnBecomesZero) {
  const auto x = Matrix({{5, 0}, {5, 2}}, {0, 1});
  const std::vector<std::size_t> rows{0, 1};
  const auto s = Standardizer::Fit(x, rows);
  EXPECT_EQ(s.mean[0], 5.0);
  EXPECT_EQ(s.std[0], kStdFloor);
  EXPECT_EQ(s.Apply(x.row(0))[0], 0.0);
  EXPECT_EQ(s.Apply(x.row(1))[0], 0.0);
  // Population std of [0, 2] is 1.
  EXPECT_EQ(s.mean[1], 1.0);
  EXPECT_EQ(s.std[1], 1.0);
  EXPECT_EQ(s.Apply(x.row(0))[1], -1.0);
  EXPECT_EQ(s.Apply(x.row(1))[1], 1.0);
}

TEST(Standardizer, UsesOnlyFitRows) {
  const auto x = Matrix({{0}, {2}, {100}}, {0, 1, 0});
  const std::vector<std::size_t> rows{0, 1};
  const auto s = Standardizer::Fit(x, rows);
  EXPECT_EQ(s.mean[0], 1.0);
  EXPECT_EQ(s.Apply(x.row(2))[0], 99.0);
  EXPECT_THROW(Standardizer::Fit(x, {}), DataError);
}

TEST(Standardizer, JsonRoundTrip) {
  const auto x = Noisy(40, 1);
  std::vector<std::size_t> rows{1, 2, 3, 4, 5};
  const auto s = Standardizer::Fit(x, rows, "probe_train");
  const auto back = Standardizer::FromJson(s.ToJson());
  EXPECT_EQ(back.mean, s.mean);
  EXPECT_EQ(back.std, s.std);
  EXPECT_EQ(back.source, "probe_train");
}

TEST(WeightedBce, Examples) {
  EXPECT_NEAR(WeightedBce(0.5, 1, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(WeightedBce(0.5, 1, 3.0), 3.0 * std::log(2.0), 1e-15);
  EXPECT_NEAR(WeightedBce(0.5, 0, 3.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(WeightedBce(0.5, 0, 17.0), std::log(2.0), 1e-15);
  // Clamping keeps the loss finite at the boundary.
  EXPECT_NEAR(WeightedBce(0.0, 1, 1.0), -std::log(kProbabilityClamp), 1e-9);
  EXPECT_NEAR(WeightedBce(1.0, 0, 1.0), -std::log(kProbabilityClamp), 1e-6);
}

TEST(WeightedBceObjective, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(314);
  std::normal_distribution<double> normal;
  const double h = 1e-5;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng() % 20;
    const std::size_t f = 1 + rng() % 6;
    std::vector<double> x(n * f);
    std::vector<std::uint8_t> y(n);
    for (auto& v : x) v = normal(rng);
    for (auto& v : y) v = rng() % 2;
    std::vector<std::size_t> batch(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = i;
    std::vector<double> params(f + 1);
    for (auto& v : params) v = 0.5 * normal(rng);
    const double pos_weight = 0.2 + 5.0 * (rng() % 100) / 100.0;
    const auto obj = WeightedBceObjective(x, f, y, batch, params, pos_weight);
    double diff2 = 0.0;
    double norm2 = 0.0;
    for (std::size_t j = 0; j <= f; ++j) {
      auto plus = params;
      auto minus = params;
      plus[j] += h;
      minus[j] -= h;
      const double fd =
          (WeightedBceObjective(x, f, y, batch, plus, pos_weight).loss -
           WeightedBceObjective(x, f, y, batch, minus, pos_weight).loss) /
          (2.0 * h);
      diff2 += (fd - obj.gradient[j]) * (fd - obj.gradient[j]);
      norm2 += std::max(fd * fd, obj.gradient[j] * obj.gradient[j]);
    }
    EXPECT_LE(std::sqrt(diff2) / std::max(std::sqrt(norm2), 1e-300), 1e-6)
        << "instance " << t;
  }
}

TEST(AdamW, FirstStepMovesByLearningRate) {
  for (double g : {0.001, 1.0, -250.0}) {
    AdamW opt(1, AdamWConfig{});
    std::vector<double> theta{0.0};
    const std::vector<double> grad{g};
    opt.Step(theta, grad);
    EXPECT_NEAR(std::abs(theta[0]), 1e-3, 1e-8);
    EXPECT_LT(theta[0] * g, 0.0);
  }
}

TEST(AdamW, DecoupledDecayShrinksParameters) {
  AdamWConfig cfg;
  cfg.weight_decay = 0.1;
  AdamW opt(1, cfg);
  std::vector<double> theta{2.0};
  const std::vector<double> zero{0.0};
  opt.Step(theta, zero);
  EXPECT_NEAR(theta[0], 2.0 * (1.0 - 1e-3 * 0.1), 1e-15);
}

TEST(ProbeModel, PredictionExamples) {
  ProbeModel m;
  m.weights = {0.0, 0.0};
  m.standardizer.mean = {0.0, 0.0};
  m.standardizer.std = {1.0, 1.0};
  EXPECT_DOUBLE_EQ(m.PredictErrorScore(std::vector<double>{3.0, -1.0}), 0.5);
  // Hand computation: z = 2*(4-1)/2 + (-1)*(0-2)/4 + 0.25 = 3.75.
  m.weights = {2.0, -1.0};
  m.bias = 0.25;
  m.standardizer.mean = {1.0, 2.0};
  m.standardizer.std = {2.0, 4.0};
  const std::vector<double> x{4.0, 0.0};
  EXPECT_DOUBLE_EQ(m.Logit(x), 3.75);
  EXPECT_NEAR(m.PredictErrorScore(x), 1.0 / (1.0 + std::exp(-3.75)), 1e-15);
  EXPECT_THROW(m.Logit(std::vector<double>{1.0}), DataError);
}

TEST(TrainProbe, SeparableToyReachesPerfectValidation) {
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 200; ++i) {
    y.push_back(i % 5 == 0);
    rows.push_back({y.back() ? 1.0 : -1.0});
  }
  const auto x = Matrix(rows, y);
  const auto split = StratifiedSplit(x.labels(), 0.5, 3);
  const auto model = TrainProbe(x, split, ProbeHyperParams{});
  ASSERT_TRUE(model.val_aucpr.has_value());
  EXPECT_DOUBLE_EQ(*model.val_aucpr, 1.0);
  EXPECT_GT(model.weights[0], 0.0);
}

TEST(TrainProbe, PosWeightIsNegOverPosOnProbeTrain) {
  const auto x = Noisy(400, 2);
  const auto split = StratifiedSplit(x.labels(), 0.5, 1);
  std::size_t pos = 0;
  for (auto r : split.probe_train) pos += x.labels()[r];
  const double expected = static_cast<double>(split.probe_train.size() - pos) /
                          static_cast<double>(pos);
  EXPECT_DOUBLE_EQ(TrainProbe(x, split, {}).pos_weight, expected);
}

TEST(TrainProbe, DeterministicAndLossDecreases) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto x = Noisy(600, seed);
    const auto split = StratifiedSplit(x.labels(), 0.5, seed);
    ProbeHyperParams hp;
    hp.seed = seed;
    hp.epochs = 40;
    ProbeTrainingTrace trace;
    const auto a = TrainProbe(x, split, hp, &trace);
    const auto b = TrainProbe(x, split, hp);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
    ASSERT_EQ(trace.epoch_loss.size(), 40u);
    EXPECT_LE(trace.epoch_loss.back(), trace.initial_loss);
  }
}

TEST(TrainProbe, StandardizerIgnoresValidationAndTestRows) {
  auto x = Noisy(300, 7);
  const auto split = StratifiedSplit(x.labels(), 0.4, 7);
  const auto before = TrainProbe(x, split, {});
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0, 100);
  for (const auto* rows : {&split.probe_val, &split.test, &split.head_train}) {
    for (auto r : *rows) {
      for (auto& v : x.row(r)) v = normal(rng);
    }
  }
  const auto after = TrainProbe(x, split, {});
  EXPECT_EQ(after.standardizer.mean, before.standardizer.mean);
  EXPECT_EQ(after.standardizer.std, before.standardizer.std);
  EXPECT_EQ(after.pos_weight, before.pos_weight);
}

TEST(TrainProbe, RankingInvariantToAffineColumnMaps) {
  const auto x = Noisy(500, 11);
  const auto split = StratifiedSplit(x.labels(), 0.5, 11);
  ProbeHyperParams hp;
  hp.epochs = 30;
  const auto base = TrainProbe(x, split, hp);
  const auto base_scores = base.ScoreRows(x, split.test);
  std::vector<std::uint8_t> test_y;
  for (auto r : split.test) test_y.push_back(x.labels()[r]);
  const double base_ap = AveragePrecision(base_scores, test_y).aucpr;
  for (auto [a, b] : {std::pair{3.0, -7.0}, std::pair{0.01, 100.0},
                      std::pair{-2.0, 1.0}}) {
    auto y = x;
    for (std::size_t i = 0; i < y.rows(); ++i) y.at(i, 0) = a * y.at(i, 0) + b;
    const auto model = TrainProbe(y, split, hp);
    const double ap =
        AveragePrecision(model.ScoreRows(y, split.test), test_y).aucpr;
    EXPECT_NEAR(ap, base_ap, 1e-9) << "a=" << a << " b=" << b;
  }
}

TEST(TrainProbe, RejectsSingleClassProbeTrain) {
  const auto x = Noisy(100, 1);
  SplitAssignment split;
  for (std::size_t i = 0; i < 100; ++i) {
    (x.labels()[i] ? split.test : split.probe_train).push_back(i);
  }
  EXPECT_THROW(TrainProbe(x, split, {}), DataError);
}

TEST(ProbeModel, JsonRoundTripKeepsScores) {
  const auto x = Noisy(300, 4);
  const auto split = StratifiedSplit(x.labels(), 0.5, 4);
  const auto model = TrainProbe(x, split, {});
  const auto back = ProbeModel::FromJson(model.ToJson());
  EXPECT_EQ(back.ScoreRows(x, {}), model.ScoreRows(x, {}));
  EXPECT_EQ(back.feature_names, x.names());
  auto tampered = model.ToJson();
  tampered["feature_names"][0] = "other";
  EXPECT_THROW(ProbeModel::FromJson(tampered), DataError);
}

TEST(FeatureNamesHash, StableFormat) {
  const std::vector<std::string> names{"a", "b"};
  const auto h = FeatureNamesHash(names);
  EXPECT_EQ(h.rfind("fnv1a64:", 0), 0u);
  EXPECT_EQ(h.size(), 8u + 16u);
  EXPECT_NE(h, FeatureNamesHash(std::vector<std::string>{"ab"}));
}

}  // namespace
}  // namespace logitdyn
