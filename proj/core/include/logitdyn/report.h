#ifndef LOGITDYN_REPORT_H_
#define LOGITDYN_REPORT_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "logitdyn/baselines.h"

namespace logitdyn {

// Rows index the training (source) dataset, columns the test (target) one.
// Missing cells (method not transferable) are nullopt.
struct LabeledMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<std::optional<double>>> values;

  static LabeledMatrix Empty(std::vector<std::string> rows,
                             std::vector<std::string> cols);
  std::size_t rows() const { return row_labels.size(); }
  std::size_t cols() const { return col_labels.size(); }
  std::optional<double> MeanDiagonal() const;
  std::optional<double> MeanOffDiagonal() const;
  nlohmann::json ToJson() const;
};

// Cell-wise a - b (nullopt where either side is missing).
LabeledMatrix Subtract(const LabeledMatrix& a, const LabeledMatrix& b);

struct DeltaEntry {
  std::optional<double> value;  // target minus best competitor
  std::optional<std::string> best_competitor;
};

// Delta of `target` against the best other entry of `aucpr_by_method`.
// Undefined (nullopt) when target is absent or has no competitor.
DeltaEntry ComputeDelta(const std::map<std::string, double>& aucpr_by_method,
                        std::string_view target = "logit_dynamics");

struct MethodResult {
  Method method = Method::kLogitDynamics;
  std::string dataset;
  std::optional<double> val_aucpr;
  std::optional<double> test_aucpr;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::string note;     // reason when skipped
  std::string variant;  // ablation arm, empty otherwise
};

struct DatasetSummary {
  std::string name;
  std::size_t n_examples = 0;
  std::size_t n_classes = 0;
  double misclassification_rate = 0.0;
  nlohmann::json split;  // seed, fractions, subset sizes and positives
};

struct AblationSummary {
  LabeledMatrix with_dynamics;
  LabeledMatrix without_dynamics;
  LabeledMatrix difference;
  std::optional<double> mean_diagonal;
  std::optional<double> mean_off_diagonal;
};

struct EvalReport {
  std::string kind;  // in_distribution | cross_matrix | ablation
  std::string run_id;
  nlohmann::json config = nlohmann::json::object();
  std::vector<DatasetSummary> datasets;
  std::vector<MethodResult> results;
  std::map<std::string, DeltaEntry> deltas;  // per dataset
  // LogitDynamics minus top-K logits alone, per dataset.
  std::map<std::string, DeltaEntry> deltas_vs_topk;
  std::map<std::string, LabeledMatrix> matrices;
  std::map<std::string, LabeledMatrix> differences;  // logit_dynamics - m
  std::optional<AblationSummary> ablation;
  std::vector<std::string> warnings;
  std::string generated_at;  // the only non-deterministic field

  const MethodResult* Find(Method m, std::string_view dataset) const;
  nlohmann::json ToJson() const;
};

// Writes report.json, results.csv and a CSV + SVG pair per matrix into dir.
void WriteReport(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace logitdyn

#endif  // LOGITDYN_REPORT_H_
