// Naive reference implementations used only by tests. They deliberately take
// a different route from the library code (rank counting instead of sorting,
// explicit set enumeration, O(N^2) threshold sweeps) so agreement is evidence.
#ifndef LOGITDYN_TESTS_ORACLES_H_
#define LOGITDYN_TESTS_ORACLES_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

namespace logitdyn::oracle {

using Matrix = std::vector<std::vector<double>>;  // D rows of C logits

// Rank of class c: number of classes that beat it (larger value, or equal
// value with a lower index).
inline std::size_t Rank(const std::vector<double>& z, std::size_t c) {
  std::size_t r = 0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (z[j] > z[c] || (z[j] == z[c] && j < c)) ++r;
  }
  return r;
}

inline std::set<std::size_t> TopKSet(const std::vector<double>& z,
                                     std::size_t k) {
  std::set<std::size_t> s;
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (Rank(z, c) < k) s.insert(c);
  }
  return s;
}

inline std::size_t Top1(const std::vector<double>& z) {
  for (std::size_t c = 0; c < z.size(); ++c) {
    if (Rank(z, c) == 0) return c;
  }
  return 0;
}

inline std::map<std::size_t, double> SetWeights(const std::vector<double>& z,
                                                const std::set<std::size_t>& s) {
  double mx = -INFINITY;
  for (std::size_t c : s) mx = std::max(mx, z[c]);
  double total = 0.0;
  std::map<std::size_t, double> w;
  for (std::size_t c : s) {
    w[c] = std::exp(z[c] - mx);
    total += w[c];
  }
  for (auto& [c, v] : w) v /= total;
  return w;
}

inline double WeightedJaccard(const std::map<std::size_t, double>& a,
                              const std::map<std::size_t, double>& b) {
  double inter = 0.0;
  double mass_a = 0.0;
  double mass_b = 0.0;
  for (const auto& [c, v] : a) {
    mass_a += v;
    auto it = b.find(c);
    if (it != b.end()) inter += std::min(v, it->second);
  }
  for (const auto& [c, v] : b) mass_b += v;
  return inter / (mass_a + mass_b - inter);
}

// [switch, jaccard, unique_topk, mode_freq, entropy, unique_top1, commitment]
inline std::array<double, 7> Dynamics(const Matrix& traj, std::size_t k) {
  const std::size_t d = traj.size();
  const double l = static_cast<double>(d - 1);
  std::vector<std::size_t> top1;
  std::vector<std::set<std::size_t>> sets;
  for (const auto& row : traj) {
    top1.push_back(Top1(row));
    sets.push_back(TopKSet(row, k));
  }
  std::array<double, 7> f{};
  if (d > 1) {
    double switches = 0.0;
    double jac = 0.0;
    for (std::size_t i = 0; i + 1 < d; ++i) {
      switches += top1[i] != top1[i + 1] ? 1.0 : 0.0;
      jac += WeightedJaccard(SetWeights(traj[i], sets[i]),
                             SetWeights(traj[i + 1], sets[i + 1]));
    }
    f[0] = switches / l;
    f[1] = jac / l;
  } else {
    f[0] = 0.0;
    f[1] = 1.0;
  }
  std::set<std::size_t> all;
  for (const auto& s : sets) all.insert(s.begin(), s.end());
  f[2] = static_cast<double>(all.size());
  std::map<std::size_t, std::size_t> counts;
  for (std::size_t c : top1) ++counts[c];
  std::size_t mode = 0;
  double entropy = 0.0;
  for (const auto& [c, n] : counts) {
    mode = std::max(mode, n);
    const double p = static_cast<double>(n) / static_cast<double>(d);
    entropy -= p * std::log(p);
  }
  f[3] = static_cast<double>(mode) / static_cast<double>(d);
  f[4] = entropy;
  f[5] = static_cast<double>(counts.size());
  // Earliest 1-based depth from which top-1 stays equal to the final top-1.
  std::size_t star = d;
  while (star > 1 && top1[star - 2] == top1[d - 1]) --star;
  f[6] = d > 1 ? static_cast<double>(star - 1) / l : 0.0;
  return f;
}

// Step-wise AP by sweeping every distinct threshold t and recounting the
// predicted-positive set {score >= t} from scratch.
inline double AveragePrecision(const std::vector<double>& scores,
                               const std::vector<std::uint8_t>& labels) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double n_pos = 0.0;
  for (auto l : labels) n_pos += l;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0;
    double predicted = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        predicted += 1.0;
        tp += labels[i];
      }
    }
    const double recall = tp / n_pos;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

}  // namespace logitdyn::oracle

#endif  // LOGITDYN_TESTS_ORACLES_H_
