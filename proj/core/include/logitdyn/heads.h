#ifndef LOGITDYN_HEADS_H_
#define LOGITDYN_HEADS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "logitdyn/dataset.h"

namespace logitdyn {

// Linear class head on one layer's CLS state: logits = W h + b.
struct LayerHead {
  std::size_t layer_index = 0;
  Eigen::MatrixXd weight;  // C x H
  Eigen::VectorXd bias;    // C

  std::size_t classes() const { return static_cast<std::size_t>(weight.rows()); }
  std::size_t hidden_dim() const {
    return static_cast<std::size_t>(weight.cols());
  }
  Eigen::VectorXd Logits(std::span<const float> hidden) const;
};

struct HeadTrainConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 10;
  std::size_t batch_size = 512;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct HeadTrainTrace {
  // Mean training cross-entropy of each epoch, one vector per trained head.
  std::vector<std::vector<double>> epoch_loss;
};

// Trains one zero-initialized head per requested layer with multinomial
// cross-entropy and AdamW on `rows` (all examples when empty). Heads are
// independent and may train on up to `jobs` threads; each is deterministic
// given cfg.seed and its layer index.
std::vector<LayerHead> TrainLayerHeads(const HiddenStateDataset& hs,
                                       std::span<const std::size_t> layers,
                                       const HeadTrainConfig& cfg,
                                       std::span<const std::size_t> rows = {},
                                       std::size_t jobs = 1,
                                       HeadTrainTrace* trace = nullptr);

// The trailing `count` layer indices of a dataset with `total` layers.
std::vector<std::size_t> SuffixLayers(std::size_t total, std::size_t count);

// Fraction of `rows` (all when empty) where argmax of the head's logits
// equals the true label.
double HeadAccuracy(const LayerHead& head, const HiddenStateDataset& hs,
                    std::span<const std::size_t> rows = {});

// Depths 1..last_l hold head logits for layers T-last_l..T-1 (0-based), the
// final depth holds the classifier logits. Predictions and error labels come
// from the classifier logits only.
TrajectoryDataset ProjectToTrajectories(const HiddenStateDataset& hs,
                                        std::span<const LayerHead> heads,
                                        std::size_t last_l);

// LHED: magic "LHED1\0", little-endian u32 count, C, H, then per head
// [u32 layer_index, C*H f32 weights row-major, C f32 bias].
void WriteHeads(std::span<const LayerHead> heads,
                const std::filesystem::path& path);
std::vector<LayerHead> ReadHeads(const std::filesystem::path& path);

}  // namespace logitdyn

#endif  // LOGITDYN_HEADS_H_
