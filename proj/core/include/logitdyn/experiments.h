#ifndef LOGITDYN_EXPERIMENTS_H_
#define LOGITDYN_EXPERIMENTS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "logitdyn/baselines.h"
#include "logitdyn/dataset.h"
#include "logitdyn/probe.h"
#include "logitdyn/report.h"
#include "logitdyn/splits.h"

namespace logitdyn {

struct DatasetSpec {
  std::string name;
  std::filesystem::path trajectories;   // LTRJ, optional
  std::filesystem::path hidden_states;  // LHID, optional
  double p_probe = 0.2;
};

// One evaluation dataset in memory. At least one of the two views must be
// present; when both are, they describe the same examples in the same order.
struct DatasetBundle {
  std::string name;
  std::optional<TrajectoryDataset> trajectories;
  std::optional<HiddenStateDataset> hidden;
  double p_probe = 0.2;

  std::size_t size() const;
  std::size_t classes() const;
  const std::vector<std::uint8_t>& errors() const;
  void Validate() const;
};

DatasetBundle LoadBundle(const DatasetSpec& spec);

struct ExperimentConfig {
  std::string run_id = "run";
  std::filesystem::path output_dir = "reports";
  std::vector<DatasetSpec> datasets;
  std::vector<Method> methods = AllMethods();

  std::vector<std::size_t> last_l_grid{1, 3, 5, 7, 9, 12, 16, 20, 24};
  std::vector<std::size_t> top_k_grid{1, 3, 5, 7, 10};
  std::vector<double> head_lr_grid{1e-4, 2e-4, 5e-4, 7e-4, 1e-3};
  std::vector<std::size_t> head_epochs_grid{2, 5, 7, 10, 12, 16};
  std::size_t head_batch_size = 512;
  double head_weight_decay = 0.0;

  ProbeHyperParams probe;
  // 0-based layers tried by linear probing; empty means a quartile grid.
  std::vector<std::size_t> linear_probe_layers;
  double energy_temperature = 1.0;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  // Cross-dataset runs reuse each source's selected (L, K) unless set.
  std::optional<std::size_t> cross_last_l;
  std::optional<std::size_t> cross_top_k;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Relative dataset paths resolve against `base_dir`.
  static ExperimentConfig FromJson(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});
  static ExperimentConfig FromFile(const std::filesystem::path& path);
};

// Splits are computed per dataset from cfg.seed unless `splits` supplies one
// per bundle (used to audit that test labels never influence selection).
EvalReport RunInDistribution(const std::vector<DatasetBundle>& bundles,
                             const ExperimentConfig& cfg,
                             const std::vector<SplitAssignment>* splits = nullptr);

// Train on each dataset, evaluate on every dataset. Off-diagonal cells keep
// the source probe weights and refit normalization on the target's
// probe-train rows, with target heads.
EvalReport RunCrossMatrix(const std::vector<DatasetBundle>& bundles,
                          const ExperimentConfig& cfg,
                          const std::vector<SplitAssignment>* splits = nullptr);

// LogitDynamics cross matrices with and without the dynamics statistics and
// their cell-wise difference.
EvalReport RunAblation(const std::vector<DatasetBundle>& bundles,
                       const ExperimentConfig& cfg,
                       const std::vector<SplitAssignment>* splits = nullptr);

// Generalized ablation: matrix(dynamics = a) - matrix(dynamics = b).
EvalReport CompareDynamicsVariants(
    const std::vector<DatasetBundle>& bundles, const ExperimentConfig& cfg,
    bool dynamics_a, bool dynamics_b,
    const std::vector<SplitAssignment>* splits = nullptr);

}  // namespace logitdyn

#endif  // LOGITDYN_EXPERIMENTS_H_
