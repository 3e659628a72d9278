#ifndef LOGITDYN_PROBE_H_
#define LOGITDYN_PROBE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "logitdyn/features.h"
#include "logitdyn/splits.h"

namespace logitdyn {

inline constexpr double kStdFloor = 1e-8;
inline constexpr double kProbabilityClamp = 1e-7;

// Per-column mean and population standard deviation (floored at kStdFloor).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;
  std::string source;  // split the statistics came from

  static Standardizer Fit(const FeatureMatrix& x,
                          std::span<const std::size_t> rows,
                          std::string source = "probe_train");
  void Apply(std::span<const double> in, std::span<double> out) const;
  std::vector<double> Apply(std::span<const double> in) const;

  nlohmann::json ToJson() const;
  static Standardizer FromJson(const nlohmann::json& j);
};

// -pos_weight * ln p for positives, -ln(1 - p) for negatives, with p clamped
// to [kProbabilityClamp, 1 - kProbabilityClamp].
double WeightedBce(double p, std::uint8_t label, double pos_weight);

double Sigmoid(double z);

struct ObjectiveValue {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d [weights..., bias]
};

// Mean weighted BCE over `batch` rows of the row-major matrix `x` (`cols`
// columns) for a linear model params = [w_0..w_{cols-1}, b].
ObjectiveValue WeightedBceObjective(std::span<const double> x,
                                    std::size_t cols,
                                    std::span<const std::uint8_t> labels,
                                    std::span<const std::size_t> batch,
                                    std::span<const double> params,
                                    double pos_weight);

struct ProbeHyperParams {
  double learning_rate = 1e-3;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  // Keep the epoch with the best probe-val AUCPR instead of the last one.
  bool select_best_epoch = true;

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct ProbeModel {
  std::vector<double> weights;
  double bias = 0.0;
  Standardizer standardizer;
  ProbeHyperParams hyper;
  double pos_weight = 1.0;
  std::size_t best_epoch = 0;
  std::optional<double> val_aucpr;
  std::vector<std::string> feature_names;

  std::size_t features() const { return weights.size(); }
  // w . standardize(x) + b; ranks identically to the probability.
  double Logit(std::span<const double> x) const;
  // sigmoid(Logit(x)).
  double PredictErrorScore(std::span<const double> x) const;
  // Logits for the given rows (all rows when `rows` is empty).
  std::vector<double> ScoreRows(const FeatureMatrix& x,
                                std::span<const std::size_t> rows) const;

  // Same weights with different normalization statistics (cross-dataset).
  ProbeModel WithStandardizer(Standardizer s) const;

  nlohmann::json ToJson() const;
  static ProbeModel FromJson(const nlohmann::json& j);
};

struct ProbeTrainingTrace {
  double initial_loss = 0.0;
  std::vector<double> epoch_loss;  // full probe-train loss after each epoch
  std::vector<std::optional<double>> val_aucpr;
};

// Fits the standardizer and pos_weight = N_neg / N_pos on probe-train, then
// trains with AdamW and seeded shuffling from zero weights. Per-epoch
// full-batch probe-val AUCPR selects the returned checkpoint.
ProbeModel TrainProbe(const FeatureMatrix& x, const SplitAssignment& split,
                      const ProbeHyperParams& hp,
                      ProbeTrainingTrace* trace = nullptr);

// 64-bit FNV-1a over the '\n'-joined names, as "fnv1a64:<16 hex digits>".
std::string FeatureNamesHash(std::span<const std::string> names);

}  // namespace logitdyn

#endif  // LOGITDYN_PROBE_H_
