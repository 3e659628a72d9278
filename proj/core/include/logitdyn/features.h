#ifndef LOGITDYN_FEATURES_H_
#define LOGITDYN_FEATURES_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logitdyn/dataset.h"

namespace logitdyn {

struct FeatureConfig {
  std::size_t last_l = 1;  // number of head layers before the classifier row
  std::size_t top_k = 1;   // K
  bool include_dynamics = true;

  std::size_t logit_feature_count() const { return (last_l + 1) * (top_k + 1); }
  std::size_t feature_count() const {
    return logit_feature_count() + (include_dynamics ? kDynamicsCount : 0);
  }
  // Throws ConfigError unless 1 <= K < classes and last_l + 1 <= depth.
  void ValidateFor(std::size_t classes, std::size_t depth) const;

  static constexpr std::size_t kDynamicsCount = 7;
};

// Dense N x F matrix of probe inputs with the binary error label per row.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::vector<std::string> names);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return names_.size(); }
  std::span<double> row(std::size_t i) {
    return std::span<double>(values_).subspan(i * cols(), cols());
  }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * cols(), cols());
  }
  double at(std::size_t i, std::size_t j) const {
    return values_[i * cols() + j];
  }
  double& at(std::size_t i, std::size_t j) { return values_[i * cols() + j]; }

  std::vector<std::uint8_t>& labels() { return labels_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  const std::optional<FeatureConfig>& config() const { return config_; }
  void set_config(std::optional<FeatureConfig> cfg) { config_ = cfg; }

  // Subset of columns, in the given order.
  FeatureMatrix SelectColumns(std::span<const std::size_t> columns) const;

 private:
  std::vector<double> values_;
  std::vector<std::uint8_t> labels_;
  std::vector<std::string> names_;
  std::optional<FeatureConfig> config_;
};

// Indices of the k largest entries, descending by value, ties resolved toward
// the lowest class index. `exclude` (if set) is never selected.
std::vector<std::size_t> TopKIndices(std::span<const float> values,
                                     std::size_t k,
                                     std::optional<std::size_t> exclude = {});

// Per depth: [logit of predicted, K competitor logits descending]; depths in
// trajectory order. Requires K < classes.
std::vector<double> LogitBlock(const TrajectoryView& trajectory,
                               std::size_t predicted, std::size_t k);

// Softmax over the given logits with max-subtraction.
std::vector<double> RestrictedSoftmax(std::span<const double> logits);

enum DynamicsIndex : std::size_t {
  kSwitchRate = 0,
  kWeightedJaccard,
  kUniqueTopKCount,
  kTop1ModeFrequency,
  kTop1Entropy,
  kTop1UniqueCount,
  kCommitmentDepth,
};

// Seven top-K dynamics statistics over all depths of `trajectory`, in the
// DynamicsIndex order. Top-K sets use the raw logits (predicted class not
// excluded). A single-depth trajectory yields switch rate 0, Jaccard 1 and
// commitment 0.
std::array<double, FeatureConfig::kDynamicsCount> DynamicsFeatures(
    const TrajectoryView& trajectory, std::size_t k);

// Column names for a config, in the fixed feature order.
std::vector<std::string> FeatureNames(const FeatureConfig& cfg);

// Row i = LogitBlock over the trailing last_l + 1 depths, then (optionally)
// the dynamics statistics over the same depths; labels = error indicator.
FeatureMatrix BuildFeatures(const TrajectoryDataset& ds,
                            const FeatureConfig& cfg, std::size_t jobs = 1);

// CSV with header = feature names + "error".
void WriteFeaturesCsv(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix ReadFeaturesCsv(const std::filesystem::path& path);

// LFEA: magic "LFEA1\0", little-endian u32 N, F, last_l, top_k, flags
// (bit0 = dynamics, bit1 = config present), u32 name_bytes, then the
// '\n'-joined UTF-8 feature names, then N records of [F f32, u32 error].
void WriteFeaturesBinary(const FeatureMatrix& m,
                         const std::filesystem::path& path);
FeatureMatrix ReadFeaturesBinary(const std::filesystem::path& path);

}  // namespace logitdyn

#endif  // LOGITDYN_FEATURES_H_
