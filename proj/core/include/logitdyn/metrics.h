#ifndef LOGITDYN_METRICS_H_
#define LOGITDYN_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <span>

#include "logitdyn/dataset.h"

namespace logitdyn {

struct PRResult {
  double aucpr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double base_rate = 0.0;
};

// Step-wise average precision, AP = sum_n (R_n - R_{n-1}) P_n, over
// descending distinct score thresholds. Tied scores form one block whose
// precision and recall are evaluated after the whole block. Higher score
// means more likely positive. Throws DataError unless both classes appear.
PRResult AveragePrecision(std::span<const double> scores,
                          std::span<const std::uint8_t> labels);

// Fraction of examples whose prediction differs from the true label.
double MisclassificationRate(const TrajectoryDataset& ds);

}  // namespace logitdyn

#endif  // LOGITDYN_METRICS_H_
