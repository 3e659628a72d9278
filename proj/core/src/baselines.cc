#include "logitdyn/baselines.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>

#include "logitdyn/errors.h"

namespace logitdyn {
namespace {

constexpr std::array<std::pair<Method, std::string_view>, 8> kMethodNames{{
    {Method::kMaxLogit, "max_logit"},
    {Method::kEntropy, "entropy"},
    {Method::kMargin, "margin"},
    {Method::kEnergy, "energy"},
    {Method::kTopKLogits, "topk_logits"},
    {Method::kMahalanobis, "mahalanobis"},
    {Method::kLinearProbe, "linear_probe"},
    {Method::kLogitDynamics, "logit_dynamics"},
}};

double LogSumExp(std::span<const float> z, double scale) {
  double mx = -std::numeric_limits<double>::infinity();
  for (float v : z) mx = std::max(mx, v * scale);
  double total = 0.0;
  for (float v : z) total += std::exp(v * scale - mx);
  return mx + std::log(total);
}

void RequireNonEmpty(std::span<const float> z) {
  if (z.empty()) throw DataError("empty logit vector");
}

}  // namespace

std::string_view MethodName(Method m) {
  for (const auto& [method, name] : kMethodNames) {
    if (method == m) return name;
  }
  return "unknown";
}

std::optional<Method> ParseMethod(std::string_view name) {
  for (const auto& [method, n] : kMethodNames) {
    if (n == name) return method;
  }
  return std::nullopt;
}

std::vector<Method> AllMethods() {
  std::vector<Method> out;
  for (const auto& entry : kMethodNames) out.push_back(entry.first);
  return out;
}

bool IsScalarMethod(Method m) {
  return m == Method::kMaxLogit || m == Method::kEntropy ||
         m == Method::kMargin || m == Method::kEnergy;
}

bool NeedsHiddenStates(Method m) {
  return m == Method::kMahalanobis || m == Method::kLinearProbe;
}

double ScoreMaxLogit(std::span<const float> z) {
  RequireNonEmpty(z);
  return *std::max_element(z.begin(), z.end());
}

double SoftmaxEntropy(std::span<const float> z) {
  RequireNonEmpty(z);
  const double lse = LogSumExp(z, 1.0);
  double h = 0.0;
  for (float v : z) {
    const double log_p = v - lse;
    const double p = std::exp(log_p);
    if (p > 0.0) h -= p * log_p;
  }
  return h;
}

double ScoreEntropy(std::span<const float> z) { return -SoftmaxEntropy(z); }

double ScoreMargin(std::span<const float> z) {
  if (z.size() < 2) throw DataError("margin needs at least two classes");
  const auto top = TopKIndices(z, 2);
  return static_cast<double>(z[top[0]]) - static_cast<double>(z[top[1]]);
}

double ScoreEnergy(std::span<const float> z, double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError("energy temperature must be positive");
  }
  RequireNonEmpty(z);
  return temperature * LogSumExp(z, 1.0 / temperature);
}

std::vector<double> TopKLogitFeatures(std::span<const float> z,
                                      std::size_t k) {
  if (k > z.size()) throw ConfigError("top-K logits need K <= classes");
  std::vector<double> out;
  out.reserve(k);
  for (std::size_t c : TopKIndices(z, k)) out.push_back(z[c]);
  return out;
}

double ScalarConfidence(Method m, std::span<const float> z,
                        double temperature) {
  switch (m) {
    case Method::kMaxLogit:
      return ScoreMaxLogit(z);
    case Method::kEntropy:
      return ScoreEntropy(z);
    case Method::kMargin:
      return ScoreMargin(z);
    case Method::kEnergy:
      return ScoreEnergy(z, temperature);
    default:
      throw ConfigError(std::string(MethodName(m)) +
                        " is not a scalar confidence method");
  }
}

double ScalarErrorScore(Method m, std::span<const float> z,
                        double temperature) {
  return -ScalarConfidence(m, z, temperature);
}

std::vector<double> ScalarErrorScores(const TrajectoryDataset& ds, Method m,
                                      double temperature) {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out[i] = ScalarErrorScore(m, ds.trajectory(i).final_row(), temperature);
  }
  return out;
}

FeatureMatrix TopKLogitMatrix(const TrajectoryDataset& ds, std::size_t k) {
  if (k < 1 || k > ds.classes()) {
    throw ConfigError("top-K logits need 1 <= K <= classes");
  }
  std::vector<std::string> names;
  for (std::size_t j = 1; j <= k; ++j) {
    names.push_back("clf_top" + std::to_string(j) + "_logit");
  }
  FeatureMatrix m(ds.size(), std::move(names));
  m.labels() = ds.errors();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto feats = TopKLogitFeatures(ds.trajectory(i).final_row(), k);
    std::copy(feats.begin(), feats.end(), m.row(i).begin());
  }
  return m;
}

double MahalanobisLayer::Score(std::span<const float> x) const {
  const Eigen::Index h = precision.rows();
  if (static_cast<Eigen::Index>(x.size()) != h) {
    throw DataError("Mahalanobis layer expects dimension " +
                    std::to_string(h) + ", got " + std::to_string(x.size()));
  }
  Eigen::VectorXd xv(h);
  for (Eigen::Index k = 0; k < h; ++k) xv[k] = x[static_cast<std::size_t>(k)];
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < means.cols(); ++c) {
    const Eigen::VectorXd d = xv - means.col(c);
    best = std::max(best, -d.dot(precision * d));
  }
  return best;
}

MahalanobisModel FitMahalanobis(const HiddenStateDataset& hs,
                                std::span<const std::size_t> fit_rows,
                                std::span<const std::size_t> layers) {
  MahalanobisModel model;
  std::vector<std::size_t> counts(hs.classes(), 0);
  for (std::size_t r : fit_rows) {
    if (r >= hs.size()) throw DataError("Mahalanobis fit row out of range");
    ++counts[hs.true_label(r)];
  }
  std::vector<std::uint32_t> kept;
  std::vector<Eigen::Index> slot(hs.classes(), -1);
  for (std::uint32_t c = 0; c < hs.classes(); ++c) {
    if (counts[c] >= 2) {
      slot[c] = static_cast<Eigen::Index>(kept.size());
      kept.push_back(c);
    } else if (counts[c] == 1) {
      model.warnings.push_back("class " + std::to_string(c) +
                               " has a single fit sample; dropped");
    }
  }
  if (kept.size() < 2) {
    throw DataError("Mahalanobis fit needs at least two classes with two or "
                    "more samples");
  }

  const Eigen::Index h = static_cast<Eigen::Index>(hs.hidden_dim());
  for (std::size_t layer : layers) {
    if (layer >= hs.layers()) {
      throw DataError("Mahalanobis layer " + std::to_string(layer) +
                      " out of range");
    }
    MahalanobisLayer ml;
    ml.layer = layer;
    ml.classes = kept;
    ml.means = Eigen::MatrixXd::Zero(h, static_cast<Eigen::Index>(kept.size()));
    Eigen::VectorXd xv(h);
    std::size_t used = 0;
    for (std::size_t r : fit_rows) {
      const Eigen::Index s = slot[hs.true_label(r)];
      if (s < 0) continue;
      const auto state = hs.state(r, layer);
      for (Eigen::Index k = 0; k < h; ++k) ml.means(k, s) += state[k];
      ++used;
    }
    for (std::size_t j = 0; j < kept.size(); ++j) {
      ml.means.col(static_cast<Eigen::Index>(j)) /=
          static_cast<double>(counts[kept[j]]);
    }
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(h, h);
    for (std::size_t r : fit_rows) {
      const Eigen::Index s = slot[hs.true_label(r)];
      if (s < 0) continue;
      const auto state = hs.state(r, layer);
      for (Eigen::Index k = 0; k < h; ++k) xv[k] = state[k] - ml.means(k, s);
      cov.selfadjointView<Eigen::Lower>().rankUpdate(xv);
    }
    cov = cov.selfadjointView<Eigen::Lower>();
    cov /= static_cast<double>(used);
    const double trace = cov.trace();
    const double ridge = trace > 0.0
                             ? kCovarianceRidge * trace / static_cast<double>(h)
                             : kCovarianceRidge;
    cov.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
      throw NumericError("tied covariance of layer " + std::to_string(layer) +
                         " is singular after regularization");
    }
    Eigen::MatrixXd precision = llt.solve(Eigen::MatrixXd::Identity(h, h));
    ml.precision = 0.5 * (precision + precision.transpose());
    if (!ml.precision.allFinite()) {
      throw NumericError("non-finite precision matrix for layer " +
                         std::to_string(layer));
    }
    model.layers.push_back(std::move(ml));
  }
  return model;
}

std::vector<double> MahalanobisLayerScores(const MahalanobisModel& m,
                                           const HiddenStateDataset& hs,
                                           std::size_t i) {
  std::vector<double> out;
  out.reserve(m.layers.size());
  for (const auto& layer : m.layers) {
    if (layer.layer >= hs.layers()) {
      throw DataError("Mahalanobis model layer " + std::to_string(layer.layer) +
                      " not present in dataset");
    }
    out.push_back(layer.Score(hs.state(i, layer.layer)));
  }
  return out;
}

FeatureMatrix MahalanobisFeatures(const MahalanobisModel& m,
                                  const HiddenStateDataset& hs) {
  std::vector<std::string> names;
  for (const auto& layer : m.layers) {
    names.push_back("maha_layer" + std::to_string(layer.layer));
  }
  FeatureMatrix out(hs.size(), std::move(names));
  out.labels() = hs.errors();
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const auto scores = MahalanobisLayerScores(m, hs, i);
    std::copy(scores.begin(), scores.end(), out.row(i).begin());
  }
  return out;
}

FeatureMatrix LinearProbeFeatures(const HiddenStateDataset& hs,
                                  std::size_t layer) {
  if (layer >= hs.layers()) {
    throw DataError("linear-probe layer " + std::to_string(layer) +
                    " out of range for " + std::to_string(hs.layers()) +
                    " layers");
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < hs.hidden_dim(); ++k) {
    names.push_back("layer" + std::to_string(layer) + "_h" + std::to_string(k));
  }
  FeatureMatrix out(hs.size(), std::move(names));
  out.labels() = hs.errors();
  for (std::size_t i = 0; i < hs.size(); ++i) {
    const auto state = hs.state(i, layer);
    std::copy(state.begin(), state.end(), out.row(i).begin());
  }
  return out;
}

void WriteBaselineScoresCsv(std::span<const BaselineScore> scores,
                            const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "example_id,method,error_score\n";
  char buf[32];
  for (const auto& s : scores) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), s.error_score);
    out << s.example_id << ',' << s.method << ','
        << std::string_view(buf, static_cast<std::size_t>(ptr - buf)) << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace logitdyn
