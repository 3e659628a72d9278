#include "logitdyn/features.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "binary_io.h"
#include "logitdyn/errors.h"
#include "logitdyn/parallel.h"

namespace logitdyn {
namespace {

constexpr std::uint32_t kFlagDynamics = 1u;
constexpr std::uint32_t kFlagHasConfig = 2u;

std::string FormatDouble(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void FeatureConfig::ValidateFor(std::size_t classes, std::size_t depth) const {
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (top_k >= classes) {
    throw ConfigError("top_k (" + std::to_string(top_k) +
                      ") must be < number of classes (" +
                      std::to_string(classes) + ")");
  }
  if (last_l + 1 > depth) {
    throw ConfigError("last_l + 1 (" + std::to_string(last_l + 1) +
                      ") exceeds trajectory depth (" + std::to_string(depth) +
                      ")");
  }
}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::vector<std::string> names)
    : values_(rows * names.size(), 0.0),
      labels_(rows, 0),
      names_(std::move(names)) {}

FeatureMatrix FeatureMatrix::SelectColumns(
    std::span<const std::size_t> columns) const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (std::size_t c : columns) {
    if (c >= cols()) throw DataError("column index out of range");
    names.push_back(names_[c]);
  }
  FeatureMatrix out(rows(), std::move(names));
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      out.at(i, j) = at(i, columns[j]);
    }
  }
  out.labels_ = labels_;
  return out;
}

std::vector<std::size_t> TopKIndices(std::span<const float> values,
                                     std::size_t k,
                                     std::optional<std::size_t> exclude) {
  std::vector<std::size_t> idx;
  idx.reserve(values.size());
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (!exclude || c != *exclude) idx.push_back(c);
  }
  if (k > idx.size()) {
    throw ConfigError("top-k of " + std::to_string(k) + " requested from " +
                      std::to_string(idx.size()) + " candidates");
  }
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                    idx.end(), [&](std::size_t a, std::size_t b) {
                      return values[a] > values[b] ||
                             (values[a] == values[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

std::vector<double> LogitBlock(const TrajectoryView& trajectory,
                               std::size_t predicted, std::size_t k) {
  if (k >= trajectory.classes()) {
    throw ConfigError("logit block needs K < number of classes");
  }
  std::vector<double> out;
  out.reserve(trajectory.depth() * (k + 1));
  for (std::size_t d = 0; d < trajectory.depth(); ++d) {
    const auto row = trajectory.row(d);
    out.push_back(row[predicted]);
    for (std::size_t c : TopKIndices(row, k, predicted)) out.push_back(row[c]);
  }
  return out;
}

std::vector<double> RestrictedSoftmax(std::span<const double> logits) {
  std::vector<double> w(logits.size());
  if (logits.empty()) return w;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp(logits[i] - mx);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

std::array<double, FeatureConfig::kDynamicsCount> DynamicsFeatures(
    const TrajectoryView& trajectory, std::size_t k) {
  const std::size_t depth = trajectory.depth();
  const std::size_t classes = trajectory.classes();
  if (k < 1 || k > classes) {
    throw ConfigError("dynamics features need 1 <= K <= number of classes");
  }
  if (depth == 0) throw DataError("empty trajectory");

  std::vector<std::size_t> top1(depth);
  std::vector<std::vector<std::size_t>> sets(depth);
  std::vector<std::vector<double>> weights(depth);
  std::vector<double> scratch(k);
  for (std::size_t d = 0; d < depth; ++d) {
    const auto row = trajectory.row(d);
    top1[d] = ArgMax(row);
    sets[d] = TopKIndices(row, k);
    for (std::size_t j = 0; j < k; ++j) scratch[j] = row[sets[d][j]];
    weights[d] = RestrictedSoftmax(scratch);
  }

  std::array<double, FeatureConfig::kDynamicsCount> out{};
  const std::size_t pairs = depth - 1;

  if (pairs == 0) {
    out[kSwitchRate] = 0.0;
    out[kWeightedJaccard] = 1.0;
  } else {
    std::size_t switches = 0;
    double jaccard_sum = 0.0;
    for (std::size_t d = 0; d < pairs; ++d) {
      if (top1[d] != top1[d + 1]) ++switches;
      double inter = 0.0;
      double mass_a = 0.0;
      double mass_b = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        mass_a += weights[d][a];
        mass_b += weights[d + 1][a];
        for (std::size_t b = 0; b < k; ++b) {
          if (sets[d][a] == sets[d + 1][b]) {
            inter += std::min(weights[d][a], weights[d + 1][b]);
          }
        }
      }
      jaccard_sum += inter / (mass_a + mass_b - inter);
    }
    out[kSwitchRate] = static_cast<double>(switches) / pairs;
    out[kWeightedJaccard] = jaccard_sum / pairs;
  }

  std::vector<std::size_t> all_topk;
  all_topk.reserve(depth * k);
  for (const auto& s : sets) all_topk.insert(all_topk.end(), s.begin(), s.end());
  std::sort(all_topk.begin(), all_topk.end());
  out[kUniqueTopKCount] = static_cast<double>(
      std::unique(all_topk.begin(), all_topk.end()) - all_topk.begin());

  std::unordered_map<std::size_t, std::size_t> counts;
  for (std::size_t c : top1) ++counts[c];
  std::size_t mode = 0;
  double entropy = 0.0;
  for (const auto& [cls, count] : counts) {
    mode = std::max(mode, count);
    const double p = static_cast<double>(count) / depth;
    entropy -= p * std::log(p);
  }
  out[kTop1ModeFrequency] = static_cast<double>(mode) / depth;
  out[kTop1Entropy] = entropy;
  out[kTop1UniqueCount] = static_cast<double>(counts.size());

  // Earliest 1-based depth from which top-1 stays equal to the final top-1.
  std::size_t commit = depth;
  while (commit > 1 && top1[commit - 2] == top1[depth - 1]) --commit;
  out[kCommitmentDepth] =
      pairs == 0 ? 0.0 : static_cast<double>(commit - 1) / pairs;
  return out;
}

std::vector<std::string> FeatureNames(const FeatureConfig& cfg) {
  std::vector<std::string> names;
  names.reserve(cfg.feature_count());
  for (std::size_t d = 0; d <= cfg.last_l; ++d) {
    const std::string prefix =
        d == cfg.last_l ? std::string("clf") : "depth" + std::to_string(d + 1);
    names.push_back(prefix + "_pred_logit");
    for (std::size_t j = 1; j <= cfg.top_k; ++j) {
      names.push_back(prefix + "_comp" + std::to_string(j) + "_logit");
    }
  }
  if (cfg.include_dynamics) {
    for (const char* n :
         {"dyn_switch_rate", "dyn_weighted_jaccard", "dyn_unique_topk_count",
          "dyn_top1_mode_frequency", "dyn_top1_entropy",
          "dyn_top1_unique_count", "dyn_commitment_depth"}) {
      names.emplace_back(n);
    }
  }
  return names;
}

FeatureMatrix BuildFeatures(const TrajectoryDataset& ds,
                            const FeatureConfig& cfg, std::size_t jobs) {
  cfg.ValidateFor(ds.classes(), ds.depth());
  FeatureMatrix m(ds.size(), FeatureNames(cfg));
  m.set_config(cfg);
  m.labels() = ds.errors();
  const std::size_t logit_cols = cfg.logit_feature_count();
  ParallelFor(ds.size(), jobs, [&](std::size_t i) {
    const TrajectoryView view = ds.trajectory(i).suffix(cfg.last_l + 1);
    auto row = m.row(i);
    const auto block = LogitBlock(view, ds.predicted_label(i), cfg.top_k);
    std::copy(block.begin(), block.end(), row.begin());
    if (cfg.include_dynamics) {
      const auto dyn = DynamicsFeatures(view, cfg.top_k);
      std::copy(dyn.begin(), dyn.end(),
                row.begin() + static_cast<std::ptrdiff_t>(logit_cols));
    }
  });
  return m;
}

void WriteFeaturesCsv(const FeatureMatrix& m,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  for (const auto& name : m.names()) out << name << ',';
  out << "error\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (double v : m.row(i)) out << FormatDouble(v) << ',';
    out << static_cast<int>(m.labels()[i]) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

FeatureMatrix ReadFeaturesCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty CSV");
  auto header = SplitCsvLine(line);
  if (header.empty() || header.back() != "error") {
    throw DataError(path.string() + ": last CSV column must be 'error'");
  }
  header.pop_back();
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != header.size() + 1) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) +
                      " has " + std::to_string(cells.size()) + " cells");
    }
    std::vector<double> row(header.size());
    for (std::size_t j = 0; j < header.size(); ++j) {
      const auto& cell = cells[j];
      auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), row[j]);
      if (ec != std::errc() || ptr != cell.data() + cell.size() ||
          !std::isfinite(row[j])) {
        throw DataError(path.string() + ": bad value '" + cell + "' on line " +
                        std::to_string(line_no));
      }
    }
    const std::string& e = cells.back();
    if (e != "0" && e != "1") {
      throw DataError(path.string() + ": error label must be 0/1 on line " +
                      std::to_string(line_no));
    }
    rows.push_back(std::move(row));
    labels.push_back(e == "1" ? 1 : 0);
  }
  FeatureMatrix m(rows.size(), header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
  }
  m.labels() = std::move(labels);
  return m;
}

void WriteFeaturesBinary(const FeatureMatrix& m,
                         const std::filesystem::path& path) {
  internal::ByteWriter w;
  w.Bytes(internal::Magic("LFEA"));
  w.U32(static_cast<std::uint32_t>(m.rows()));
  w.U32(static_cast<std::uint32_t>(m.cols()));
  const auto& cfg = m.config();
  w.U32(cfg ? static_cast<std::uint32_t>(cfg->last_l) : 0);
  w.U32(cfg ? static_cast<std::uint32_t>(cfg->top_k) : 0);
  std::uint32_t flags = 0;
  if (cfg) {
    flags |= kFlagHasConfig;
    if (cfg->include_dynamics) flags |= kFlagDynamics;
  }
  w.U32(flags);
  std::string names;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    if (j) names.push_back('\n');
    names += m.names()[j];
  }
  w.U32(static_cast<std::uint32_t>(names.size()));
  w.Bytes(names);
  std::vector<float> row(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      row[j] = static_cast<float>(m.at(i, j));
    }
    w.F32s(row);
    w.U32(m.labels()[i]);
  }
  internal::WriteFile(path, w.buffer());
}

FeatureMatrix ReadFeaturesBinary(const std::filesystem::path& path) {
  const std::string bytes = internal::ReadFile(path);
  internal::ByteReader r(bytes, path.string());
  internal::CheckMagic(r, "LFEA");
  const std::uint32_t n = r.U32("header N");
  const std::uint32_t f = r.U32("header F");
  const std::uint32_t last_l = r.U32("header last_l");
  const std::uint32_t top_k = r.U32("header top_k");
  const std::uint32_t flags = r.U32("header flags");
  const std::uint32_t name_bytes = r.U32("header name_bytes");
  const std::string blob(r.Bytes(name_bytes, "feature names"));
  std::vector<std::string> names;
  if (f > 0) {
    std::istringstream ss(blob);
    std::string name;
    while (std::getline(ss, name, '\n')) names.push_back(name);
    if (!blob.empty() && blob.back() == '\n') names.emplace_back();
  }
  if (names.size() != f) {
    throw DataError(path.string() + ": feature name count " +
                    std::to_string(names.size()) + " != F " +
                    std::to_string(f));
  }
  FeatureMatrix m(n, std::move(names));
  std::vector<float> row(f);
  for (std::size_t i = 0; i < n; ++i) {
    r.F32s(row, "feature record");
    for (std::size_t j = 0; j < f; ++j) {
      if (!std::isfinite(row[j])) {
        throw DataError(path.string() + ": non-finite feature in record " +
                        std::to_string(i));
      }
      m.at(i, j) = row[j];
    }
    const std::uint32_t e = r.U32("error label");
    if (e > 1) throw DataError(path.string() + ": error label must be 0/1");
    m.labels()[i] = static_cast<std::uint8_t>(e);
  }
  if (r.remaining() != 0) {
    throw DataError(path.string() + ": trailing bytes after offset " +
                    std::to_string(r.offset()));
  }
  if (flags & kFlagHasConfig) {
    m.set_config(FeatureConfig{last_l, top_k, (flags & kFlagDynamics) != 0});
  }
  return m;
}

}  // namespace logitdyn
