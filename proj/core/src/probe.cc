#include "logitdyn/probe.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "logitdyn/errors.h"
#include "logitdyn/metrics.h"
#include "logitdyn/optim.h"

namespace logitdyn {
namespace {

std::vector<std::size_t> AllRows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

// Standardized copy of the given rows, row-major.
std::vector<double> StandardizeRows(const FeatureMatrix& x,
                                    std::span<const std::size_t> rows,
                                    const Standardizer& s) {
  std::vector<double> out(rows.size() * x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    s.Apply(x.row(rows[r]),
            std::span<double>(out).subspan(r * x.cols(), x.cols()));
  }
  return out;
}

double LinearScore(std::span<const double> xs, std::span<const double> params) {
  double z = params.back();
  for (std::size_t j = 0; j < xs.size(); ++j) z += params[j] * xs[j];
  return z;
}

}  // namespace

Standardizer Standardizer::Fit(const FeatureMatrix& x,
                               std::span<const std::size_t> rows,
                               std::string source) {
  if (rows.empty()) throw DataError("standardizer fit set is empty");
  const std::size_t f = x.cols();
  Standardizer s;
  s.source = std::move(source);
  s.mean.assign(f, 0.0);
  s.std.assign(f, 0.0);
  for (std::size_t r : rows) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < f; ++j) s.mean[j] += row[j];
  }
  const double n = static_cast<double>(rows.size());
  for (double& m : s.mean) m /= n;
  for (std::size_t r : rows) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < f; ++j) {
      const double d = row[j] - s.mean[j];
      s.std[j] += d * d;
    }
  }
  for (double& v : s.std) v = std::max(std::sqrt(v / n), kStdFloor);
  return s;
}

void Standardizer::Apply(std::span<const double> in,
                         std::span<double> out) const {
  if (in.size() != mean.size() || out.size() != mean.size()) {
    throw DataError("standardizer expects " + std::to_string(mean.size()) +
                    " features, got " + std::to_string(in.size()));
  }
  for (std::size_t j = 0; j < in.size(); ++j) {
    out[j] = (in[j] - mean[j]) / std[j];
  }
}

std::vector<double> Standardizer::Apply(std::span<const double> in) const {
  std::vector<double> out(in.size());
  Apply(in, out);
  return out;
}

nlohmann::json Standardizer::ToJson() const {
  return {{"mean", mean}, {"std", std}, {"source", source}};
}

Standardizer Standardizer::FromJson(const nlohmann::json& j) {
  Standardizer s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  s.source = j.value("source", std::string("probe_train"));
  if (s.mean.size() != s.std.size()) {
    throw DataError("standardizer mean/std length mismatch");
  }
  for (double v : s.std) {
    if (!(v > 0.0)) throw DataError("standardizer std entries must be > 0");
  }
  return s;
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double WeightedBce(double p, std::uint8_t label, double pos_weight) {
  p = std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
  return label ? -pos_weight * std::log(p) : -std::log(1.0 - p);
}

ObjectiveValue WeightedBceObjective(std::span<const double> x,
                                    std::size_t cols,
                                    std::span<const std::uint8_t> labels,
                                    std::span<const std::size_t> batch,
                                    std::span<const double> params,
                                    double pos_weight) {
  if (params.size() != cols + 1) {
    throw DataError("parameter vector must have cols + 1 entries");
  }
  ObjectiveValue out;
  out.gradient.assign(cols + 1, 0.0);
  if (batch.empty()) return out;
  for (std::size_t r : batch) {
    const auto xs = x.subspan(r * cols, cols);
    const double z = LinearScore(xs, params);
    const double p = Sigmoid(z);
    const std::uint8_t y = labels[r];
    out.loss += WeightedBce(p, y, pos_weight);
    const double dz = y ? -pos_weight * (1.0 - p) : p;
    for (std::size_t j = 0; j < cols; ++j) out.gradient[j] += dz * xs[j];
    out.gradient[cols] += dz;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& g : out.gradient) g *= inv;
  return out;
}

void ProbeHyperParams::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("probe lr must be positive");
  if (batch_size == 0) throw ConfigError("probe batch size must be positive");
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("probe weight decay must be non-negative");
  }
}

nlohmann::json ProbeHyperParams::ToJson() const {
  return {{"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"weight_decay", weight_decay},
          {"seed", seed},
          {"select_best_epoch", select_best_epoch}};
}

double ProbeModel::Logit(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw DataError("probe expects " + std::to_string(weights.size()) +
                    " features, got " + std::to_string(x.size()));
  }
  double z = bias;
  for (std::size_t j = 0; j < x.size(); ++j) {
    z += weights[j] * (x[j] - standardizer.mean[j]) / standardizer.std[j];
  }
  return z;
}

double ProbeModel::PredictErrorScore(std::span<const double> x) const {
  return Sigmoid(Logit(x));
}

std::vector<double> ProbeModel::ScoreRows(
    const FeatureMatrix& x, std::span<const std::size_t> rows) const {
  std::vector<double> out;
  if (rows.empty()) {
    out.reserve(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out.push_back(Logit(x.row(i)));
  } else {
    out.reserve(rows.size());
    for (std::size_t i : rows) out.push_back(Logit(x.row(i)));
  }
  return out;
}

ProbeModel ProbeModel::WithStandardizer(Standardizer s) const {
  if (s.mean.size() != weights.size()) {
    throw DataError("feature-dimension mismatch: probe has " +
                    std::to_string(weights.size()) +
                    " weights, standardizer has " +
                    std::to_string(s.mean.size()) + " columns");
  }
  ProbeModel out = *this;
  out.standardizer = std::move(s);
  return out;
}

std::string FeatureNamesHash(std::span<const std::string> names) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ull;
  };
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) mix('\n');
    for (char c : names[i]) mix(static_cast<unsigned char>(c));
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string("fnv1a64:") + buf;
}

nlohmann::json ProbeModel::ToJson() const {
  nlohmann::json cfg = hyper.ToJson();
  cfg["pos_weight"] = pos_weight;
  cfg["best_epoch"] = best_epoch;
  nlohmann::json j = {{"weights", weights},
                      {"bias", bias},
                      {"standardizer", standardizer.ToJson()},
                      {"config", cfg},
                      {"feature_names", feature_names},
                      {"feature_names_hash", FeatureNamesHash(feature_names)}};
  j["val_aucpr"] = val_aucpr ? nlohmann::json(*val_aucpr) : nlohmann::json();
  return j;
}

ProbeModel ProbeModel::FromJson(const nlohmann::json& j) {
  try {
    ProbeModel m;
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.standardizer = Standardizer::FromJson(j.at("standardizer"));
    const auto& cfg = j.at("config");
    m.hyper.learning_rate = cfg.value("learning_rate", 1e-3);
    m.hyper.epochs = cfg.value("epochs", std::size_t{100});
    m.hyper.batch_size = cfg.value("batch_size", std::size_t{256});
    m.hyper.weight_decay = cfg.value("weight_decay", 0.0);
    m.hyper.seed = cfg.value("seed", std::uint64_t{0});
    m.hyper.select_best_epoch = cfg.value("select_best_epoch", true);
    m.pos_weight = cfg.value("pos_weight", 1.0);
    m.best_epoch = cfg.value("best_epoch", std::size_t{0});
    if (j.contains("val_aucpr") && j["val_aucpr"].is_number()) {
      m.val_aucpr = j["val_aucpr"].get<double>();
    }
    m.feature_names =
        j.value("feature_names", std::vector<std::string>{});
    if (m.standardizer.mean.size() != m.weights.size()) {
      throw DataError("probe weights and standardizer differ in length");
    }
    if (!m.feature_names.empty() && m.feature_names.size() != m.weights.size()) {
      throw DataError("probe feature_names length differs from weights");
    }
    if (j.contains("feature_names_hash") &&
        j["feature_names_hash"].get<std::string>() !=
            FeatureNamesHash(m.feature_names)) {
      throw DataError("probe feature_names_hash does not match feature_names");
    }
    for (double w : m.weights) {
      if (!std::isfinite(w)) throw DataError("non-finite probe weight");
    }
    if (!std::isfinite(m.bias)) throw DataError("non-finite probe bias");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid probe JSON: ") + e.what());
  }
}

ProbeModel TrainProbe(const FeatureMatrix& x, const SplitAssignment& split,
                      const ProbeHyperParams& hp, ProbeTrainingTrace* trace) {
  hp.Validate();
  const std::size_t f = x.cols();
  const auto& train_rows = split.probe_train;
  std::size_t n_pos = 0;
  for (std::size_t r : train_rows) {
    if (r >= x.rows()) throw DataError("probe-train index out of range");
    n_pos += x.labels()[r];
  }
  const std::size_t n_neg = train_rows.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw DataError("probe-train split must contain both error and correct "
                    "examples");
  }

  ProbeModel model;
  model.hyper = hp;
  model.feature_names = x.names();
  model.pos_weight = static_cast<double>(n_neg) / static_cast<double>(n_pos);
  model.standardizer = Standardizer::Fit(x, train_rows, "probe_train");

  const std::vector<double> xs_train =
      StandardizeRows(x, train_rows, model.standardizer);
  std::vector<std::uint8_t> y_train(train_rows.size());
  for (std::size_t r = 0; r < train_rows.size(); ++r) {
    y_train[r] = x.labels()[train_rows[r]];
  }
  const std::vector<double> xs_val =
      StandardizeRows(x, split.probe_val, model.standardizer);
  std::vector<std::uint8_t> y_val(split.probe_val.size());
  std::size_t val_pos = 0;
  for (std::size_t r = 0; r < split.probe_val.size(); ++r) {
    y_val[r] = x.labels()[split.probe_val[r]];
    val_pos += y_val[r];
  }
  const bool val_usable = val_pos > 0 && val_pos < y_val.size();

  std::vector<double> params(f + 1, 0.0);
  AdamW opt(f + 1, AdamWConfig{.learning_rate = hp.learning_rate,
                               .weight_decay = hp.weight_decay});
  std::mt19937_64 rng(hp.seed);
  std::vector<std::size_t> order = AllRows(train_rows.size());

  if (trace) {
    *trace = ProbeTrainingTrace{};
    trace->initial_loss =
        WeightedBceObjective(xs_train, f, y_train, order, params,
                             model.pos_weight)
            .loss;
  }

  std::vector<double> best_params = params;
  std::optional<double> best_val;
  std::size_t best_epoch = 0;
  std::vector<double> val_scores(y_val.size());
  for (std::size_t epoch = 1; epoch <= hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
      const std::size_t end = std::min(order.size(), start + hp.batch_size);
      const auto batch =
          std::span<const std::size_t>(order).subspan(start, end - start);
      const ObjectiveValue obj = WeightedBceObjective(
          xs_train, f, y_train, batch, params, model.pos_weight);
      if (!std::isfinite(obj.loss)) {
        throw NumericError("probe training diverged (non-finite loss) at "
                           "epoch " + std::to_string(epoch));
      }
      opt.Step(params, obj.gradient);
    }
    if (trace) {
      trace->epoch_loss.push_back(
          WeightedBceObjective(xs_train, f, y_train, AllRows(y_train.size()),
                               params, model.pos_weight)
              .loss);
    }
    std::optional<double> val;
    if (val_usable) {
      for (std::size_t r = 0; r < y_val.size(); ++r) {
        val_scores[r] = LinearScore(
            std::span<const double>(xs_val).subspan(r * f, f), params);
      }
      val = AveragePrecision(val_scores, y_val).aucpr;
    }
    if (trace) trace->val_aucpr.push_back(val);
    const bool better =
        !hp.select_best_epoch || !val_usable || !best_val || *val > *best_val;
    if (better) {
      best_params = params;
      best_epoch = epoch;
      if (val) best_val = val;
    }
  }

  model.weights.assign(best_params.begin(), best_params.end() - 1);
  model.bias = best_params.back();
  model.best_epoch = best_epoch;
  model.val_aucpr = best_val;
  return model;
}

}  // namespace logitdyn
