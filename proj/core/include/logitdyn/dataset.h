#ifndef LOGITDYN_DATASET_H_
#define LOGITDYN_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace logitdyn {

// Index of the largest entry; ties go to the lowest index.
std::size_t ArgMax(std::span<const float> values);
std::size_t ArgMax(std::span<const double> values);

// Read-only D x C view over one example's logit trajectory (row-major,
// head layers first, final classifier last).
class TrajectoryView {
 public:
  TrajectoryView(std::span<const float> data, std::size_t depth,
                 std::size_t classes)
      : data_(data), depth_(depth), classes_(classes) {}

  std::size_t depth() const { return depth_; }
  std::size_t classes() const { return classes_; }
  std::span<const float> row(std::size_t d) const {
    return data_.subspan(d * classes_, classes_);
  }
  std::span<const float> final_row() const { return row(depth_ - 1); }
  float at(std::size_t d, std::size_t c) const {
    return data_[d * classes_ + c];
  }
  // The trailing `rows` depths (the suffix used for feature extraction).
  TrajectoryView suffix(std::size_t rows) const {
    return TrajectoryView(data_.subspan((depth_ - rows) * classes_),
                          rows, classes_);
  }
  std::span<const float> data() const { return data_; }

 private:
  std::span<const float> data_;
  std::size_t depth_;
  std::size_t classes_;
};

// Per-example depth sequence of logit vectors. Immutable once built: the
// predicted label and error indicator are always derived from the logits.
class TrajectoryDataset {
 public:
  TrajectoryDataset() = default;

  // Validates shapes, finiteness and label ranges, then derives the
  // predicted label (argmax of the final depth) and error indicator.
  static TrajectoryDataset FromLogits(std::size_t classes, std::size_t depth,
                                      std::vector<float> logits,
                                      std::vector<std::uint32_t> true_labels,
                                      std::string dataset_id = {});

  std::size_t size() const { return true_label_.size(); }
  std::size_t classes() const { return classes_; }
  std::size_t depth() const { return depth_; }
  const std::string& dataset_id() const { return dataset_id_; }
  void set_dataset_id(std::string id) { dataset_id_ = std::move(id); }

  TrajectoryView trajectory(std::size_t i) const {
    return TrajectoryView(
        std::span<const float>(logits_).subspan(i * depth_ * classes_,
                                                depth_ * classes_),
        depth_, classes_);
  }
  std::uint32_t true_label(std::size_t i) const { return true_label_[i]; }
  std::uint32_t predicted_label(std::size_t i) const {
    return predicted_label_[i];
  }
  std::uint8_t error(std::size_t i) const { return error_[i]; }

  const std::vector<float>& logits() const { return logits_; }
  const std::vector<std::uint32_t>& true_labels() const { return true_label_; }
  const std::vector<std::uint32_t>& predicted_labels() const {
    return predicted_label_;
  }
  const std::vector<std::uint8_t>& errors() const { return error_; }

  // Copy with some true labels replaced (used by audits and fixtures).
  TrajectoryDataset WithTrueLabels(std::vector<std::uint32_t> labels) const;

  friend bool operator==(const TrajectoryDataset& a,
                         const TrajectoryDataset& b);

 private:
  std::size_t classes_ = 0;
  std::size_t depth_ = 0;
  std::vector<float> logits_;
  std::vector<std::uint32_t> true_label_;
  std::vector<std::uint32_t> predicted_label_;
  std::vector<std::uint8_t> error_;
  std::string dataset_id_;
};

// Per-example, per-layer CLS hidden vectors plus the classifier logits.
class HiddenStateDataset {
 public:
  HiddenStateDataset() = default;

  static HiddenStateDataset FromStates(
      std::size_t layers, std::size_t hidden_dim, std::size_t classes,
      std::vector<float> states, std::vector<std::uint32_t> true_labels,
      std::vector<float> classifier_logits, std::string dataset_id = {});

  std::size_t size() const { return true_label_.size(); }
  std::size_t layers() const { return layers_; }
  std::size_t hidden_dim() const { return hidden_dim_; }
  std::size_t classes() const { return classes_; }
  const std::string& dataset_id() const { return dataset_id_; }
  void set_dataset_id(std::string id) { dataset_id_ = std::move(id); }

  std::span<const float> state(std::size_t i, std::size_t layer) const {
    return std::span<const float>(states_).subspan(
        (i * layers_ + layer) * hidden_dim_, hidden_dim_);
  }
  std::span<const float> classifier_logits(std::size_t i) const {
    return std::span<const float>(classifier_logits_)
        .subspan(i * classes_, classes_);
  }
  std::uint32_t true_label(std::size_t i) const { return true_label_[i]; }
  std::uint32_t predicted_label(std::size_t i) const {
    return predicted_label_[i];
  }
  std::uint8_t error(std::size_t i) const { return error_[i]; }

  const std::vector<float>& states() const { return states_; }
  const std::vector<float>& all_classifier_logits() const {
    return classifier_logits_;
  }
  const std::vector<std::uint32_t>& true_labels() const { return true_label_; }
  const std::vector<std::uint8_t>& errors() const { return error_; }

  friend bool operator==(const HiddenStateDataset& a,
                         const HiddenStateDataset& b);

 private:
  std::size_t layers_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t classes_ = 0;
  std::vector<float> states_;
  std::vector<std::uint32_t> true_label_;
  std::vector<float> classifier_logits_;
  std::vector<std::uint32_t> predicted_label_;
  std::vector<std::uint8_t> error_;
  std::string dataset_id_;
};

// `<dir>/<stem>.manifest.json` for a data file `<dir>/<stem>.<ext>`.
std::filesystem::path ManifestPath(const std::filesystem::path& data_path);

// LTRJ: magic "LTRJ1\0", little-endian u32 N, C, D, flags (0), then N records
// of [D*C f32 logits row-major, u32 y, u32 y_hat].
TrajectoryDataset LoadTrajectories(const std::filesystem::path& path);

// Writes the LTRJ payload and its manifest sidecar. `manifest_extra` is
// merged into the manifest (split provenance, generator config, ...).
void WriteTrajectories(const TrajectoryDataset& ds,
                       const std::filesystem::path& path,
                       const nlohmann::json& manifest_extra = {});

// LHID: magic "LHID1\0", little-endian u32 N, T, H, C, then N records of
// [T*H f32 states, u32 y, C f32 classifier logits].
HiddenStateDataset LoadHiddenStates(const std::filesystem::path& path);
void WriteHiddenStates(const HiddenStateDataset& ds,
                       const std::filesystem::path& path,
                       const nlohmann::json& manifest_extra = {});

// Reads the manifest sidecar if present, else returns an empty object.
nlohmann::json ReadManifest(const std::filesystem::path& data_path);

// Header fields of either format, without reading the payload.
struct FileHeader {
  std::string format;  // "LTRJ" or "LHID"
  std::uint32_t n = 0;
  std::uint32_t classes = 0;
  std::uint32_t depth = 0;       // LTRJ only
  std::uint32_t layers = 0;      // LHID only
  std::uint32_t hidden_dim = 0;  // LHID only
  std::uint32_t flags = 0;
  std::uintmax_t file_bytes = 0;
  std::uintmax_t expected_bytes = 0;
};
FileHeader ReadHeader(const std::filesystem::path& path);

}  // namespace logitdyn

#endif  // LOGITDYN_DATASET_H_
