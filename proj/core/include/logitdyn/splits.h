#ifndef LOGITDYN_SPLITS_H_
#define LOGITDYN_SPLITS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace logitdyn {

// Disjoint partition of example indices. Each subset is sorted ascending.
struct SplitAssignment {
  std::vector<std::size_t> head_train;
  std::vector<std::size_t> probe_train;
  std::vector<std::size_t> probe_val;
  std::vector<std::size_t> test;
  double p_probe = 0.2;
  double test_fraction = 0.15;
  double probe_train_fraction = 0.75;
  std::uint64_t seed = 0;

  std::size_t total() const {
    return head_train.size() + probe_train.size() + probe_val.size() +
           test.size();
  }
  nlohmann::json ToJson() const;
  static SplitAssignment FromJson(const nlohmann::json& j);
  // Throws DataError unless the subsets are disjoint and cover [0, n).
  void Validate(std::size_t n) const;

  friend bool operator==(const SplitAssignment&,
                         const SplitAssignment&) = default;
};

// Round-half-up used for every stratified allocation.
std::size_t RoundHalfUp(double x);

// Three-stage stratified split on the binary label: test (15%) is carved from
// the full set, the probe pool (p_probe of the rest) from the remaining 85%,
// and the probe pool splits 75/25 into probe-train/probe-val. Each stage
// takes round(frac * n) items, of which round(frac * n_pos) are positives,
// drawn from seeded shuffles of the positives and negatives.
SplitAssignment StratifiedSplit(std::span<const std::uint8_t> labels,
                                double p_probe, std::uint64_t seed);

}  // namespace logitdyn

#endif  // LOGITDYN_SPLITS_H_
