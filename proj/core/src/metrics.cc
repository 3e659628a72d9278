#include "logitdyn/metrics.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "logitdyn/errors.h"

namespace logitdyn {

PRResult AveragePrecision(std::span<const double> scores,
                          std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("score and label vectors differ in length");
  }
  PRResult result;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(scores[i])) throw DataError("non-finite score");
    if (labels[i]) {
      ++result.n_pos;
    } else {
      ++result.n_neg;
    }
  }
  if (result.n_pos == 0 || result.n_neg == 0) {
    throw DataError("average precision needs at least one positive and one "
                    "negative label");
  }
  result.base_rate =
      static_cast<double>(result.n_pos) / static_cast<double>(labels.size());

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  double prev_recall = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      tp += labels[order[i]];
      ++seen;
      ++i;
    }
    const double recall =
        static_cast<double>(tp) / static_cast<double>(result.n_pos);
    const double precision =
        static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  result.aucpr = ap;
  return result;
}

double MisclassificationRate(const TrajectoryDataset& ds) {
  if (ds.size() == 0) return 0.0;
  std::size_t errors = 0;
  for (std::uint8_t e : ds.errors()) errors += e;
  return static_cast<double>(errors) / static_cast<double>(ds.size());
}

}  // namespace logitdyn
