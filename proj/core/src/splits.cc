#include "logitdyn/splits.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "logitdyn/errors.h"

namespace logitdyn {
namespace {

struct Pool {
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  std::size_t size() const { return pos.size() + neg.size(); }
};

// Moves round(frac * |pool|) items out of `pool` (positives first by the
// stratification rule), returning them sorted.
std::vector<std::size_t> Carve(Pool& pool, double frac) {
  const std::size_t total = pool.size();
  const std::size_t take = std::min(total, RoundHalfUp(frac * total));
  std::size_t take_pos =
      std::min(pool.pos.size(), RoundHalfUp(frac * pool.pos.size()));
  take_pos = std::min(take_pos, take);
  std::size_t take_neg = take - take_pos;
  if (take_neg > pool.neg.size()) {
    take_neg = pool.neg.size();
    take_pos = std::min(pool.pos.size(), take - take_neg);
  }
  std::vector<std::size_t> out;
  out.reserve(take_pos + take_neg);
  out.insert(out.end(), pool.pos.end() - static_cast<std::ptrdiff_t>(take_pos),
             pool.pos.end());
  out.insert(out.end(), pool.neg.end() - static_cast<std::ptrdiff_t>(take_neg),
             pool.neg.end());
  pool.pos.resize(pool.pos.size() - take_pos);
  pool.neg.resize(pool.neg.size() - take_neg);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::size_t> Sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

std::size_t RoundHalfUp(double x) {
  // The small slack keeps products like 0.15 * 10 on the intended side.
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

SplitAssignment StratifiedSplit(std::span<const std::uint8_t> labels,
                                double p_probe, std::uint64_t seed) {
  if (labels.size() < 20) {
    throw DataError("stratified split needs at least 20 examples, got " +
                    std::to_string(labels.size()));
  }
  if (!(p_probe > 0.0 && p_probe < 1.0)) {
    throw ConfigError("p_probe must lie in (0, 1)");
  }
  Pool pool;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] ? pool.pos : pool.neg).push_back(i);
  }
  if (pool.pos.empty() || pool.neg.empty()) {
    throw DataError("stratified split needs both error and correct examples");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(pool.pos.begin(), pool.pos.end(), rng);
  std::shuffle(pool.neg.begin(), pool.neg.end(), rng);

  SplitAssignment s;
  s.p_probe = p_probe;
  s.seed = seed;
  s.test = Carve(pool, s.test_fraction);
  Pool probe;
  {
    std::vector<std::size_t> carved = Carve(pool, p_probe);
    for (std::size_t i : carved) (labels[i] ? probe.pos : probe.neg).push_back(i);
    std::shuffle(probe.pos.begin(), probe.pos.end(), rng);
    std::shuffle(probe.neg.begin(), probe.neg.end(), rng);
  }
  s.head_train = pool.pos;
  s.head_train.insert(s.head_train.end(), pool.neg.begin(), pool.neg.end());
  s.head_train = Sorted(std::move(s.head_train));
  s.probe_train = Carve(probe, s.probe_train_fraction);
  s.probe_val = probe.pos;
  s.probe_val.insert(s.probe_val.end(), probe.neg.begin(), probe.neg.end());
  s.probe_val = Sorted(std::move(s.probe_val));
  return s;
}

nlohmann::json SplitAssignment::ToJson() const {
  return {{"seed", seed},
          {"p_probe", p_probe},
          {"test_fraction", test_fraction},
          {"probe_train_fraction", probe_train_fraction},
          {"head_train", head_train},
          {"probe_train", probe_train},
          {"probe_val", probe_val},
          {"test", test}};
}

void SplitAssignment::Validate(std::size_t n) const {
  std::vector<std::uint8_t> seen(n, 0);
  for (const auto* subset : {&head_train, &probe_train, &probe_val, &test}) {
    for (std::size_t i : *subset) {
      if (i >= n) {
        throw DataError("split index " + std::to_string(i) +
                        " out of range for " + std::to_string(n) +
                        " examples");
      }
      if (seen[i]++) {
        throw DataError("split index " + std::to_string(i) +
                        " appears in more than one subset");
      }
    }
  }
  if (total() != n) {
    throw DataError("split covers " + std::to_string(total()) + " of " +
                    std::to_string(n) + " examples");
  }
}

SplitAssignment SplitAssignment::FromJson(const nlohmann::json& j) {
  try {
    SplitAssignment s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.p_probe = j.at("p_probe").get<double>();
    s.test_fraction = j.value("test_fraction", 0.15);
    s.probe_train_fraction = j.value("probe_train_fraction", 0.75);
    s.head_train = j.at("head_train").get<std::vector<std::size_t>>();
    s.probe_train = j.at("probe_train").get<std::vector<std::size_t>>();
    s.probe_val = j.at("probe_val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid split JSON: ") + e.what());
  }
}

}  // namespace logitdyn
