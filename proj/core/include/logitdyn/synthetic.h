#ifndef LOGITDYN_SYNTHETIC_H_
#define LOGITDYN_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "logitdyn/dataset.h"

namespace logitdyn {

// Inclusive range of 1-based depths; the commit depth is drawn uniformly.
struct DepthRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
};

// Desk-scale trajectory generator. Every example gets a commit depth: from
// that depth onward its top-1 class is the final prediction. Before it, the
// top-1 is some other class; for error examples that class is resampled at
// each depth with probability 1 - exp(-volatility_error).
struct SyntheticConfig {
  std::size_t n_examples = 1000;
  std::size_t n_classes = 10;
  std::size_t depth = 6;
  double error_rate = 0.2;
  DepthRange commit_depth_correct{1, 2};
  DepthRange commit_depth_error{2, 6};
  double volatility_error = 1.0;
  double volatility_correct = 0.0;
  double boost = 3.0;        // logit margin given to the intended top-1
  double noise = 1.0;        // std of per-depth class noise
  double logit_scale = 1.0;  // global multiplier, models a domain's scale
  std::uint64_t seed = 0;
  std::string dataset_id = "synthetic";

  void Validate() const;
  nlohmann::json ToJson() const;
};

// Deterministic given cfg.seed. The number of errors is exactly
// round(error_rate * n_examples), assigned to a seeded random subset.
TrajectoryDataset GenerateSynthetic(const SyntheticConfig& cfg);

// Hidden states whose class signal sharpens with depth: layer t carries
// ((t+1)/T) * separation * mu_y plus isotropic noise. The classifier logits
// are a noisy linear read-out of the last layer, so errors arise naturally.
struct SyntheticHiddenConfig {
  std::size_t n_examples = 1000;
  std::size_t n_classes = 5;
  std::size_t layers = 6;
  std::size_t hidden_dim = 8;
  double separation = 2.0;
  double noise = 1.0;
  double classifier_noise = 4.0;  // ~7% errors at the other defaults
  std::uint64_t seed = 0;
  std::string dataset_id = "synthetic-hidden";

  void Validate() const;
  nlohmann::json ToJson() const;
};

HiddenStateDataset GenerateSyntheticHidden(const SyntheticHiddenConfig& cfg);

}  // namespace logitdyn

#endif  // LOGITDYN_SYNTHETIC_H_
