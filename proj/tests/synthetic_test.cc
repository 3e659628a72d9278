#include <gtest/gtest.h>

#include "logitdyn/errors.h"
#include "logitdyn/features.h"
#include "logitdyn/metrics.h"
#include "logitdyn/synthetic.h"

namespace logitdyn {
namespace {

double MeanErrorSwitchRate(const TrajectoryDataset& ds) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.error(i)) continue;
    sum += DynamicsFeatures(ds.trajectory(i), 1)[kSwitchRate];
    ++n;
  }
  return sum / static_cast<double>(n);
}

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticConfig cfg;
  cfg.n_examples = 500;
  cfg.seed = 42;
  EXPECT_EQ(GenerateSynthetic(cfg), GenerateSynthetic(cfg));
  SyntheticConfig other = cfg;
  other.seed = 43;
  EXPECT_NE(GenerateSynthetic(cfg).logits(), GenerateSynthetic(other).logits());
}

TEST(Synthetic, RealizedErrorRateNearTarget) {
  SyntheticConfig cfg;
  cfg.n_examples = 5000;
  cfg.error_rate = 0.2;
  cfg.seed = 7;
  const double rate = MisclassificationRate(GenerateSynthetic(cfg));
  EXPECT_GE(rate, 0.18);
  EXPECT_LE(rate, 0.22);
}

TEST(Synthetic, ErrorIndicatorMatchesLabels) {
  SyntheticConfig cfg;
  cfg.n_examples = 2000;
  cfg.seed = 1;
  const auto ds = GenerateSynthetic(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ASSERT_EQ(ds.error(i), ds.predicted_label(i) != ds.true_label(i) ? 1 : 0);
  }
}

TEST(Synthetic, ImmediateCommitmentGivesZeroCommitmentFeature) {
  SyntheticConfig cfg;
  cfg.n_examples = 2000;
  cfg.depth = 6;
  cfg.commit_depth_correct = {1, 1};
  cfg.seed = 5;
  const auto ds = GenerateSynthetic(cfg);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.error(i)) continue;
    const auto view = ds.trajectory(i);
    for (std::size_t d = 0; d < view.depth(); ++d) {
      ASSERT_EQ(ArgMax(view.row(d)), ds.true_label(i));
    }
    ASSERT_EQ(DynamicsFeatures(view, 3)[kCommitmentDepth], 0.0);
  }
}

TEST(Synthetic, VolatilityRaisesErrorSwitchRate) {
  SyntheticConfig cfg;
  cfg.n_examples = 4000;
  cfg.depth = 8;
  cfg.commit_depth_error = {4, 8};
  cfg.seed = 9;
  double prev = -1.0;
  for (double v : {0.1, 0.5, 1.5, 4.0}) {
    cfg.volatility_error = v;
    const double sr = MeanErrorSwitchRate(GenerateSynthetic(cfg));
    EXPECT_GT(sr, prev) << "volatility " << v;
    prev = sr;
  }
}

TEST(Synthetic, RejectsInvalidConfig) {
  SyntheticConfig cfg;
  cfg.error_rate = 0.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.commit_depth_error = {0, 3};
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = {};
  cfg.commit_depth_correct = {2, cfg.depth + 1};
  EXPECT_THROW(GenerateSynthetic(cfg), ConfigError);
}

TEST(SyntheticHidden, DeterministicAndSeparable) {
  SyntheticHiddenConfig cfg;
  cfg.n_examples = 300;
  cfg.seed = 2;
  const auto a = GenerateSyntheticHidden(cfg);
  EXPECT_EQ(a, GenerateSyntheticHidden(cfg));
  EXPECT_EQ(a.size(), 300u);
  std::size_t errors = 0;
  for (auto e : a.errors()) errors += e;
  EXPECT_GT(errors, 0u);
  EXPECT_LT(errors, a.size());
}

}  // namespace
}  // namespace logitdyn
