#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "logitdyn/baselines.h"
#include "logitdyn/errors.h"
#include "logitdyn/heads.h"
#include "logitdyn/synthetic.h"
#include "test_util.h"

namespace logitdyn {
namespace {

using V = std::vector<float>;

TEST(MaxLogit, Examples) {
  EXPECT_EQ(ScoreMaxLogit(V{3, 1, 0}), 3.0);
  EXPECT_EQ(ScoreMaxLogit(V{-5, -2}), -2.0);
  EXPECT_EQ(ScoreMaxLogit(V{1.5f, 1.5f, 1.5f}), 1.5);
}

TEST(Entropy, Examples) {
  EXPECT_NEAR(SoftmaxEntropy(V{0, 0, 0, 0}), std::log(4.0), 1e-15);
  EXPECT_NEAR(SoftmaxEntropy(V{1000, 0, 0}), 0.0, 1e-12);
  EXPECT_NEAR(SoftmaxEntropy(V{static_cast<float>(std::log(3.0)), 0}),
              -(0.75 * std::log(0.75) + 0.25 * std::log(0.25)), 1e-7);
  EXPECT_NEAR(SoftmaxEntropy(V{static_cast<float>(std::log(3.0)), 0}), 0.5623, 1e-4);
  EXPECT_EQ(ScoreEntropy(V{0, 0}), -SoftmaxEntropy(V{0, 0}));
}

TEST(Margin, Examples) {
  EXPECT_EQ(ScoreMargin(V{3, 1, 0}), 2.0);
  EXPECT_EQ(ScoreMargin(V{4, 4, 1}), 0.0);
  EXPECT_EQ(ScoreMargin(V{-1, -3}), 2.0);
  EXPECT_THROW(ScoreMargin(V{1}), DataError);
}

TEST(Energy, Examples) {
  EXPECT_NEAR(ScoreEnergy(V{0, 0}), std::log(2.0), 1e-15);
  EXPECT_EQ(ScoreEnergy(V{5}), 5.0);
  EXPECT_NEAR(ScoreEnergy(V{1000, 0}), 1000.0, 1e-9);
  EXPECT_NEAR(ScoreEnergy(V{0, 0}, 2.0), 2.0 * std::log(2.0), 1e-15);
  EXPECT_THROW(ScoreEnergy(V{0, 0}, 0.0), ConfigError);
}

TEST(TopKLogitFeatures, Examples) {
  EXPECT_EQ(TopKLogitFeatures(V{3, 1, 0}, 2), (std::vector<double>{3, 1}));
  EXPECT_EQ(TopKLogitFeatures(V{1, 4, 4}, 2), (std::vector<double>{4, 4}));
  EXPECT_EQ(TopKLogitFeatures(V{1, 4, 2}, 3), (std::vector<double>{4, 2, 1}));
  EXPECT_THROW(TopKLogitFeatures(V{1, 4, 2}, 4), ConfigError);
}

TEST(ScalarErrorScore, IsNegatedConfidence) {
  const V z{0.3f, 2.0f, -1.0f};
  for (Method m : AllMethods()) {
    if (!IsScalarMethod(m)) continue;
    EXPECT_EQ(ScalarErrorScore(m, z), -ScalarConfidence(m, z));
  }
  EXPECT_THROW(ScalarConfidence(Method::kLogitDynamics, z), ConfigError);
}

TEST(ScalarScores, ClassPermutationAndShiftProperties) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 300; ++t) {
    const std::size_t c = 2 + rng() % 8;
    // Quarter-integers keep shifted values exact in f32.
    V z(c);
    for (auto& v : z) v = static_cast<float>(static_cast<int>(rng() % 41) - 20) / 4.0f;
    V p = z;
    std::shuffle(p.begin(), p.end(), rng);
    for (Method m : {Method::kMaxLogit, Method::kEntropy, Method::kMargin,
                     Method::kEnergy}) {
      EXPECT_NEAR(ScalarConfidence(m, z), ScalarConfidence(m, p), 1e-12);
    }
    const float shift = static_cast<float>(static_cast<int>(rng() % 21) - 10);
    V s = z;
    for (auto& v : s) v += shift;
    EXPECT_EQ(ScoreMargin(s), ScoreMargin(z));
    EXPECT_EQ(ScoreMaxLogit(s), ScoreMaxLogit(z) + shift);
    EXPECT_NEAR(ScoreEnergy(s), ScoreEnergy(z) + shift, 1e-12);
    EXPECT_NEAR(SoftmaxEntropy(s), SoftmaxEntropy(z), 1e-12);
  }
}

TEST(MethodNames, RoundTrip) {
  for (Method m : AllMethods()) EXPECT_EQ(ParseMethod(MethodName(m)), m);
  EXPECT_FALSE(ParseMethod("nope").has_value());
  EXPECT_TRUE(NeedsHiddenStates(Method::kMahalanobis));
  EXPECT_TRUE(NeedsHiddenStates(Method::kLinearProbe));
  EXPECT_FALSE(NeedsHiddenStates(Method::kLogitDynamics));
}

TEST(TopKLogitMatrix, UsesFinalRow) {
  const auto ds = TrajectoryDataset::FromLogits(3, 2, {9, 9, 9, 1, 4, 2}, {1});
  const auto m = TopKLogitMatrix(ds, 2);
  EXPECT_EQ(m.cols(), 2u);
  EXPECT_EQ(m.at(0, 0), 4.0);
  EXPECT_EQ(m.at(0, 1), 2.0);
  EXPECT_EQ(m.names()[0], "clf_top1_logit");
}

HiddenStateDataset FromPoints(const std::vector<std::vector<float>>& pts,
                              const std::vector<std::uint32_t>& y,
                              std::size_t classes) {
  std::vector<float> states;
  std::vector<float> clf;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    states.insert(states.end(), pts[i].begin(), pts[i].end());
    for (std::size_t c = 0; c < classes; ++c) clf.push_back(c == y[i] ? 1.0f : 0.0f);
  }
  return HiddenStateDataset::FromStates(1, pts[0].size(), classes, states, y, clf);
}

TEST(Mahalanobis, ZeroScatterUsesAbsoluteRidge) {
  const auto hs = FromPoints({{0, 0}, {0, 0}, {4, 0}, {4, 0}}, {0, 0, 1, 1}, 2);
  const std::vector<std::size_t> rows{0, 1, 2, 3};
  const std::vector<std::size_t> layers{0};
  const auto m = FitMahalanobis(hs, rows, layers);
  ASSERT_EQ(m.layers.size(), 1u);
  const auto& l = m.layers[0];
  EXPECT_EQ(l.means(0, 0), 0.0);
  EXPECT_EQ(l.means(0, 1), 4.0);
  EXPECT_EQ(l.means(1, 1), 0.0);
  EXPECT_NEAR(l.precision(0, 0), 1.0 / kCovarianceRidge, 1e-3);
  EXPECT_NEAR(l.precision(0, 1), 0.0, 1e-9);
  EXPECT_EQ(l.Score(V{0, 0}), 0.0);
}

TEST(Mahalanobis, IsotropicPrecisionNearInverseVariance) {
  std::mt19937_64 rng(3);
  std::normal_distribution<float> normal(0.0f, 2.0f);
  std::vector<std::vector<float>> pts;
  std::vector<std::uint32_t> y;
  for (int i = 0; i < 20000; ++i) {
    const std::uint32_t c = i % 2;
    y.push_back(c);
    pts.push_back({normal(rng) + 5.0f * c, normal(rng), normal(rng)});
  }
  const auto hs = FromPoints(pts, y, 2);
  std::vector<std::size_t> rows(pts.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto m = FitMahalanobis(hs, rows, std::vector<std::size_t>{0});
  const auto& p = m.layers[0].precision;
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(p(i, i), 0.25, 0.025);
    for (int j = 0; j < 3; ++j) {
      if (i != j) EXPECT_NEAR(p(i, j), 0.0, 0.025);
    }
  }
  EXPECT_TRUE(p.isApprox(p.transpose(), 0.0));
}

TEST(Mahalanobis, OneClassIsRejectedAndSmallClassesDropped) {
  const auto one = FromPoints({{0}, {1}, {2}}, {0, 0, 0}, 2);
  const std::vector<std::size_t> rows{0, 1, 2};
  EXPECT_THROW(FitMahalanobis(one, rows, std::vector<std::size_t>{0}), DataError);
  const auto three = FromPoints({{0}, {1}, {5}, {6}, {9}}, {0, 0, 1, 1, 2}, 3);
  const std::vector<std::size_t> all{0, 1, 2, 3, 4};
  const auto m = FitMahalanobis(three, all, std::vector<std::size_t>{0});
  EXPECT_EQ(m.layers[0].classes.size(), 2u);
  EXPECT_FALSE(m.warnings.empty());
}

TEST(Mahalanobis, HandComputedScores) {
  MahalanobisLayer l;
  l.classes = {0, 1};
  l.means.resize(2, 2);
  l.means << 0, 4, 0, 0;
  l.precision = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_EQ(l.Score(V{2, 0}), -4.0);
  EXPECT_EQ(l.Score(V{4, 0}), 0.0);
  EXPECT_LT(l.Score(V{100, 100}), -1e4);
  EXPECT_THROW(l.Score(V{1}), DataError);
}

TEST(Mahalanobis, ScoresNeverPositive) {
  SyntheticHiddenConfig sc;
  sc.n_examples = 400;
  sc.seed = 8;
  const auto hs = GenerateSyntheticHidden(sc);
  std::vector<std::size_t> rows(200);
  std::iota(rows.begin(), rows.end(), 0);
  const auto m = FitMahalanobis(hs, rows, SuffixLayers(hs.layers(), 3));
  const auto x = MahalanobisFeatures(m, hs);
  EXPECT_EQ(x.cols(), m.layers.size());
  for (double v : x.values()) EXPECT_LE(v, 0.0);
  EXPECT_EQ(x.labels(), hs.errors());
}

TEST(LinearProbeFeatures, RawStatesAndLabels) {
  SyntheticHiddenConfig sc;
  sc.n_examples = 30;
  sc.hidden_dim = 4;
  const auto hs = GenerateSyntheticHidden(sc);
  const auto x = LinearProbeFeatures(hs, hs.layers() - 1);
  EXPECT_EQ(x.cols(), 4u);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    EXPECT_EQ(x.at(i, 2), hs.state(i, hs.layers() - 1)[2]);
    EXPECT_EQ(x.labels()[i],
              ArgMax(hs.classifier_logits(i)) != hs.true_label(i) ? 1 : 0);
  }
  EXPECT_THROW(LinearProbeFeatures(hs, hs.layers()), DataError);
}

TEST(BaselineScoresCsv, Layout) {
  testing::TempDir dir;
  const std::vector<BaselineScore> s{{0, "max_logit", -1.5}, {1, "entropy", 0.25}};
  WriteBaselineScoresCsv(s, dir / "s.csv");
  std::ifstream in(dir / "s.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "example_id,method,error_score");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("0,max_logit,-1.5", 0), 0u);
}

}  // namespace
}  // namespace logitdyn
