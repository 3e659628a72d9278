#include "logitdyn/synthetic.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "logitdyn/errors.h"

namespace logitdyn {
namespace {

void CheckRange(const DepthRange& r, std::size_t depth, const char* name) {
  if (r.lo < 1 || r.hi > depth || r.lo > r.hi) {
    throw ConfigError(std::string(name) + " must satisfy 1 <= lo <= hi <= depth");
  }
}

nlohmann::json RangeJson(const DepthRange& r) { return {r.lo, r.hi}; }

// Uniform class in [0, classes) skipping up to two excluded classes.
std::uint32_t DrawClassExcept(std::mt19937_64& rng, std::size_t classes,
                              std::uint32_t a, std::uint32_t b) {
  const std::size_t excluded = (a == b) ? 1 : 2;
  std::uniform_int_distribution<std::size_t> pick(0, classes - excluded - 1);
  std::size_t k = pick(rng);
  for (std::uint32_t c = 0; c < classes; ++c) {
    if (c == a || c == b) continue;
    if (k == 0) return c;
    --k;
  }
  return a;  // unreachable for valid inputs
}

}  // namespace

void SyntheticConfig::Validate() const {
  if (n_classes < 2) throw ConfigError("synthetic n_classes must be >= 2");
  if (depth < 1) throw ConfigError("synthetic depth must be >= 1");
  if (!(error_rate > 0.0 && error_rate < 1.0)) {
    throw ConfigError("synthetic error_rate must lie in (0, 1)");
  }
  CheckRange(commit_depth_correct, depth, "commit_depth_correct");
  CheckRange(commit_depth_error, depth, "commit_depth_error");
  if (!(volatility_error > 0.0)) {
    throw ConfigError("volatility_error must be positive");
  }
  if (!(volatility_correct >= 0.0)) {
    throw ConfigError("volatility_correct must be non-negative");
  }
  if (!(boost > 0.0)) throw ConfigError("boost must be positive");
  if (!(noise >= 0.0)) throw ConfigError("noise must be non-negative");
  if (!(logit_scale > 0.0)) throw ConfigError("logit_scale must be positive");
}

nlohmann::json SyntheticConfig::ToJson() const {
  return {{"n_examples", n_examples},
          {"n_classes", n_classes},
          {"depth", depth},
          {"error_rate", error_rate},
          {"commit_depth_correct", RangeJson(commit_depth_correct)},
          {"commit_depth_error", RangeJson(commit_depth_error)},
          {"volatility_error", volatility_error},
          {"volatility_correct", volatility_correct},
          {"boost", boost},
          {"noise", noise},
          {"logit_scale", logit_scale},
          {"seed", seed}};
}

TrajectoryDataset GenerateSynthetic(const SyntheticConfig& cfg) {
  cfg.Validate();
  const std::size_t n = cfg.n_examples;
  const std::size_t classes = cfg.n_classes;
  const std::size_t depth = cfg.depth;
  std::mt19937_64 rng(cfg.seed);

  std::vector<std::uint8_t> is_error(n, 0);
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_err = static_cast<std::size_t>(
        std::floor(cfg.error_rate * static_cast<double>(n) + 0.5));
    for (std::size_t k = 0; k < n_err && k < n; ++k) is_error[order[k]] = 1;
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> any_class(
      0, static_cast<std::uint32_t>(classes - 1));
  const double component_std = cfg.noise / std::sqrt(2.0);

  std::vector<float> logits(n * depth * classes);
  std::vector<std::uint32_t> labels(n);
  std::vector<double> base(classes);
  std::vector<double> row(classes);

  for (std::size_t i = 0; i < n; ++i) {
    const bool err = is_error[i] != 0;
    const std::uint32_t y = any_class(rng);
    const std::uint32_t final_top = err ? DrawClassExcept(rng, classes, y, y) : y;
    labels[i] = y;

    const DepthRange& range =
        err ? cfg.commit_depth_error : cfg.commit_depth_correct;
    std::uniform_int_distribution<std::size_t> commit_pick(range.lo, range.hi);
    const std::size_t commit = commit_pick(rng);
    const double volatility = err ? cfg.volatility_error : cfg.volatility_correct;
    const double p_switch = 1.0 - std::exp(-volatility);

    for (double& b : base) b = component_std * gauss(rng);

    std::uint32_t top = final_top;
    for (std::size_t d = 0; d < depth; ++d) {
      // d is 0-based; depth index d + 1 is "committed" when >= commit.
      if (d + 1 >= commit) {
        top = final_top;
      } else if (d == 0) {
        top = DrawClassExcept(rng, classes, final_top, final_top);
      } else if (classes > 2 && coin(rng) < p_switch) {
        top = DrawClassExcept(rng, classes, final_top, top);
      }
      for (std::size_t c = 0; c < classes; ++c) {
        row[c] = base[c] + component_std * gauss(rng);
      }
      double runner_up = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < classes; ++c) {
        if (c != top) runner_up = std::max(runner_up, row[c]);
      }
      row[top] = runner_up + cfg.boost * jitter(rng);
      float* out = &logits[(i * depth + d) * classes];
      for (std::size_t c = 0; c < classes; ++c) {
        out[c] = static_cast<float>(cfg.logit_scale * row[c]);
      }
    }
  }
  return TrajectoryDataset::FromLogits(classes, depth, std::move(logits),
                                       std::move(labels), cfg.dataset_id);
}

void SyntheticHiddenConfig::Validate() const {
  if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  if (layers < 1 || hidden_dim < 1) {
    throw ConfigError("layers and hidden_dim must be >= 1");
  }
  if (!(noise >= 0.0) || !(classifier_noise >= 0.0) || !(separation >= 0.0)) {
    throw ConfigError("noise, classifier_noise and separation must be >= 0");
  }
}

nlohmann::json SyntheticHiddenConfig::ToJson() const {
  return {{"n_examples", n_examples}, {"n_classes", n_classes},
          {"layers", layers},         {"hidden_dim", hidden_dim},
          {"separation", separation}, {"noise", noise},
          {"classifier_noise", classifier_noise},
          {"seed", seed}};
}

HiddenStateDataset GenerateSyntheticHidden(const SyntheticHiddenConfig& cfg) {
  cfg.Validate();
  const std::size_t n = cfg.n_examples;
  const std::size_t classes = cfg.n_classes;
  const std::size_t layers = cfg.layers;
  const std::size_t h = cfg.hidden_dim;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> any_class(
      0, static_cast<std::uint32_t>(classes - 1));

  std::vector<double> means(classes * h);
  for (double& m : means) m = gauss(rng);

  std::vector<float> states(n * layers * h);
  std::vector<float> clf(n * classes);
  std::vector<std::uint32_t> labels(n);
  std::vector<double> last(h);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t y = any_class(rng);
    labels[i] = y;
    for (std::size_t t = 0; t < layers; ++t) {
      const double strength = cfg.separation * static_cast<double>(t + 1) /
                              static_cast<double>(layers);
      for (std::size_t k = 0; k < h; ++k) {
        const double v = strength * means[y * h + k] + cfg.noise * gauss(rng);
        states[(i * layers + t) * h + k] = static_cast<float>(v);
        if (t + 1 == layers) last[k] = v;
      }
    }
    for (std::size_t c = 0; c < classes; ++c) {
      double dot = 0.0;
      for (std::size_t k = 0; k < h; ++k) dot += means[c * h + k] * last[k];
      clf[i * classes + c] =
          static_cast<float>(dot + cfg.classifier_noise * gauss(rng));
    }
  }
  return HiddenStateDataset::FromStates(layers, h, classes, std::move(states),
                                        std::move(labels), std::move(clf),
                                        cfg.dataset_id);
}

}  // namespace logitdyn
