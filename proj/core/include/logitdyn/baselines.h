#ifndef LOGITDYN_BASELINES_H_
#define LOGITDYN_BASELINES_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "logitdyn/dataset.h"
#include "logitdyn/features.h"

namespace logitdyn {

enum class Method {
  kMaxLogit,
  kEntropy,
  kMargin,
  kEnergy,
  kTopKLogits,
  kMahalanobis,
  kLinearProbe,
  kLogitDynamics,
};

std::string_view MethodName(Method m);
std::optional<Method> ParseMethod(std::string_view name);
std::vector<Method> AllMethods();
// Scalar methods need no training: their error score is -confidence.
bool IsScalarMethod(Method m);
bool NeedsHiddenStates(Method m);

// Confidence scores over one logit vector (higher = more confident).
double ScoreMaxLogit(std::span<const float> z);
// Softmax entropy in nats (not negated).
double SoftmaxEntropy(std::span<const float> z);
// Confidence orientation: -SoftmaxEntropy(z).
double ScoreEntropy(std::span<const float> z);
// Top-1 minus top-2 logit; needs at least two classes.
double ScoreMargin(std::span<const float> z);
// -E(x) = T * logsumexp(z / T); needs T > 0.
double ScoreEnergy(std::span<const float> z, double temperature = 1.0);
// K largest logits, descending, ties toward the lowest class index.
std::vector<double> TopKLogitFeatures(std::span<const float> z, std::size_t k);

double ScalarConfidence(Method m, std::span<const float> z,
                        double temperature = 1.0);
// The single place where confidences become error scores (negation).
double ScalarErrorScore(Method m, std::span<const float> z,
                        double temperature = 1.0);
// Error scores of a scalar method on each example's final-depth logits.
std::vector<double> ScalarErrorScores(const TrajectoryDataset& ds, Method m,
                                      double temperature = 1.0);

// Top-K logits of the final classifier row as probe features.
FeatureMatrix TopKLogitMatrix(const TrajectoryDataset& ds, std::size_t k);

inline constexpr double kCovarianceRidge = 1e-6;

// Tied-covariance Gaussian model of one layer's CLS states.
struct MahalanobisLayer {
  std::size_t layer = 0;
  std::vector<std::uint32_t> classes;  // classes kept in the fit
  Eigen::MatrixXd means;               // H x |classes|
  Eigen::MatrixXd precision;           // H x H, symmetric positive definite

  // max over classes of -(x - mu_c)^T P (x - mu_c); always <= 0.
  double Score(std::span<const float> x) const;
};

struct MahalanobisModel {
  std::vector<MahalanobisLayer> layers;
  std::vector<std::string> warnings;
};

// Class means and pooled within-class covariance on `fit_rows`, regularized
// with kCovarianceRidge * trace / H on the diagonal (kCovarianceRidge alone
// when the scatter is exactly zero). Classes with fewer than two samples are
// dropped with a warning.
MahalanobisModel FitMahalanobis(const HiddenStateDataset& hs,
                                std::span<const std::size_t> fit_rows,
                                std::span<const std::size_t> layers);

// One score per model layer for example `i`.
std::vector<double> MahalanobisLayerScores(const MahalanobisModel& m,
                                           const HiddenStateDataset& hs,
                                           std::size_t i);
FeatureMatrix MahalanobisFeatures(const MahalanobisModel& m,
                                  const HiddenStateDataset& hs);

// Raw CLS vector at `layer`; labels from the classifier logits.
FeatureMatrix LinearProbeFeatures(const HiddenStateDataset& hs,
                                  std::size_t layer);

struct BaselineScore {
  std::size_t example_id = 0;
  std::string method;
  double error_score = 0.0;
};
// CSV "example_id,method,error_score".
void WriteBaselineScoresCsv(std::span<const BaselineScore> scores,
                            const std::filesystem::path& path);

}  // namespace logitdyn

#endif  // LOGITDYN_BASELINES_H_
