#include "logitdyn/heads.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "binary_io.h"
#include "logitdyn/errors.h"
#include "logitdyn/optim.h"
#include "logitdyn/parallel.h"

namespace logitdyn {
namespace {

std::vector<std::size_t> RowsOrAll(std::span<const std::size_t> rows,
                                   std::size_t n) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  return all;
}

struct HeadFit {
  LayerHead head;
  std::vector<double> epoch_loss;
};

HeadFit TrainOneHead(const HiddenStateDataset& hs, std::size_t layer,
                     const HeadTrainConfig& cfg,
                     const std::vector<std::size_t>& rows) {
  const Eigen::Index c = static_cast<Eigen::Index>(hs.classes());
  const Eigen::Index h = static_cast<Eigen::Index>(hs.hidden_dim());
  const std::size_t n_params = static_cast<std::size_t>(c * h + c);
  std::vector<double> params(n_params, 0.0);
  std::vector<double> grads(n_params, 0.0);
  AdamW opt(n_params, AdamWConfig{.learning_rate = cfg.learning_rate,
                                  .weight_decay = cfg.weight_decay});
  Eigen::Map<Eigen::MatrixXd> w(params.data(), c, h);
  Eigen::Map<Eigen::VectorXd> b(params.data() + c * h, c);
  Eigen::Map<Eigen::MatrixXd> gw(grads.data(), c, h);
  Eigen::Map<Eigen::VectorXd> gb(grads.data() + c * h, c);

  std::mt19937_64 rng(cfg.seed ^ (0x9E3779B97F4A7C15ull * (layer + 1)));
  std::vector<std::size_t> order = rows;
  HeadFit fit;
  Eigen::MatrixXd x;
  Eigen::MatrixXd probs;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const Eigen::Index bsz = static_cast<Eigen::Index>(end - start);
      x.resize(bsz, h);
      for (Eigen::Index r = 0; r < bsz; ++r) {
        const auto state = hs.state(order[start + r], layer);
        for (Eigen::Index k = 0; k < h; ++k) x(r, k) = state[k];
      }
      probs = x * w.transpose();
      probs.rowwise() += b.transpose();
      double batch_loss = 0.0;
      for (Eigen::Index r = 0; r < bsz; ++r) {
        const double mx = probs.row(r).maxCoeff();
        probs.row(r).array() = (probs.row(r).array() - mx).exp();
        const double z = probs.row(r).sum();
        probs.row(r) /= z;
        const std::uint32_t y = hs.true_label(order[start + r]);
        batch_loss -= std::log(std::max(probs(r, y), 1e-300));
        probs(r, y) -= 1.0;
      }
      epoch_loss += batch_loss;
      const double inv = 1.0 / static_cast<double>(bsz);
      gw.noalias() = probs.transpose() * x * inv;
      gb = probs.colwise().sum().transpose() * inv;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("head training for layer " + std::to_string(layer) +
                           " diverged (non-finite loss); lower the learning "
                           "rate");
      }
      opt.Step(params, grads);
    }
    fit.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  fit.head.layer_index = layer;
  fit.head.weight = w;
  fit.head.bias = b;
  for (double v : params) {
    if (!std::isfinite(v)) {
      throw NumericError("head parameters for layer " + std::to_string(layer) +
                         " became non-finite");
    }
  }
  return fit;
}

}  // namespace

Eigen::VectorXd LayerHead::Logits(std::span<const float> hidden) const {
  if (hidden.size() != hidden_dim()) {
    throw DataError("head expects hidden size " +
                    std::to_string(hidden_dim()) + ", got " +
                    std::to_string(hidden.size()));
  }
  Eigen::VectorXd hv(static_cast<Eigen::Index>(hidden.size()));
  for (std::size_t k = 0; k < hidden.size(); ++k) {
    hv[static_cast<Eigen::Index>(k)] = hidden[k];
  }
  return weight * hv + bias;
}

void HeadTrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("head lr must be positive");
  if (batch_size == 0) throw ConfigError("head batch size must be positive");
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("head weight decay must be non-negative");
  }
}

nlohmann::json HeadTrainConfig::ToJson() const {
  return {{"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"weight_decay", weight_decay},
          {"seed", seed}};
}

std::vector<LayerHead> TrainLayerHeads(const HiddenStateDataset& hs,
                                       std::span<const std::size_t> layers,
                                       const HeadTrainConfig& cfg,
                                       std::span<const std::size_t> rows,
                                       std::size_t jobs,
                                       HeadTrainTrace* trace) {
  cfg.Validate();
  const std::vector<std::size_t> fit_rows = RowsOrAll(rows, hs.size());
  for (std::size_t layer : layers) {
    if (layer >= hs.layers()) {
      throw DataError("layer " + std::to_string(layer) +
                      " out of range for " + std::to_string(hs.layers()) +
                      " layers");
    }
  }
  std::vector<std::uint8_t> present(hs.classes(), 0);
  std::size_t distinct = 0;
  for (std::size_t r : fit_rows) {
    if (r >= hs.size()) throw DataError("head-training row out of range");
    if (!present[hs.true_label(r)]++) ++distinct;
  }
  if (distinct < 2) {
    throw DataError("head training needs at least two distinct labels");
  }

  std::vector<HeadFit> fits(layers.size());
  ParallelFor(layers.size(), jobs, [&](std::size_t i) {
    fits[i] = TrainOneHead(hs, layers[i], cfg, fit_rows);
  });
  std::vector<LayerHead> heads;
  heads.reserve(fits.size());
  if (trace) trace->epoch_loss.clear();
  for (auto& fit : fits) {
    if (trace) trace->epoch_loss.push_back(std::move(fit.epoch_loss));
    heads.push_back(std::move(fit.head));
  }
  return heads;
}

std::vector<std::size_t> SuffixLayers(std::size_t total, std::size_t count) {
  if (count > total) {
    throw ConfigError("requested the last " + std::to_string(count) +
                      " layers of a " + std::to_string(total) +
                      "-layer dataset");
  }
  std::vector<std::size_t> out(count);
  std::iota(out.begin(), out.end(), total - count);
  return out;
}

double HeadAccuracy(const LayerHead& head, const HiddenStateDataset& hs,
                    std::span<const std::size_t> rows) {
  const auto eval_rows = RowsOrAll(rows, hs.size());
  if (eval_rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t r : eval_rows) {
    const Eigen::VectorXd z = head.Logits(hs.state(r, head.layer_index));
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < z.size(); ++c) {
      if (z[c] > z[best]) best = c;
    }
    if (static_cast<std::uint32_t>(best) == hs.true_label(r)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(eval_rows.size());
}

TrajectoryDataset ProjectToTrajectories(const HiddenStateDataset& hs,
                                        std::span<const LayerHead> heads,
                                        std::size_t last_l) {
  const std::vector<std::size_t> layers = SuffixLayers(hs.layers(), last_l);
  std::vector<const LayerHead*> ordered;
  for (std::size_t layer : layers) {
    auto it = std::find_if(heads.begin(), heads.end(), [&](const LayerHead& h) {
      return h.layer_index == layer;
    });
    if (it == heads.end()) {
      throw DataError("missing head for layer " + std::to_string(layer));
    }
    if (it->classes() != hs.classes() || it->hidden_dim() != hs.hidden_dim()) {
      throw DataError("head for layer " + std::to_string(layer) +
                      " has shape incompatible with the hidden-state dataset");
    }
    ordered.push_back(&*it);
  }
  const std::size_t c = hs.classes();
  const std::size_t depth = last_l + 1;
  std::vector<float> logits(hs.size() * depth * c);
  for (std::size_t i = 0; i < hs.size(); ++i) {
    float* out = &logits[i * depth * c];
    for (std::size_t d = 0; d < last_l; ++d) {
      const Eigen::VectorXd z =
          ordered[d]->Logits(hs.state(i, ordered[d]->layer_index));
      for (std::size_t k = 0; k < c; ++k) {
        out[d * c + k] = static_cast<float>(z[static_cast<Eigen::Index>(k)]);
      }
    }
    const auto clf = hs.classifier_logits(i);
    std::copy(clf.begin(), clf.end(), out + last_l * c);
  }
  return TrajectoryDataset::FromLogits(c, depth, std::move(logits),
                                       hs.true_labels(), hs.dataset_id());
}

void WriteHeads(std::span<const LayerHead> heads,
                const std::filesystem::path& path) {
  internal::ByteWriter w;
  w.Bytes(internal::Magic("LHED"));
  const std::size_t c = heads.empty() ? 0 : heads.front().classes();
  const std::size_t h = heads.empty() ? 0 : heads.front().hidden_dim();
  w.U32(static_cast<std::uint32_t>(heads.size()));
  w.U32(static_cast<std::uint32_t>(c));
  w.U32(static_cast<std::uint32_t>(h));
  for (const auto& head : heads) {
    if (head.classes() != c || head.hidden_dim() != h) {
      throw DataError("all heads in one file must share C and H");
    }
    w.U32(static_cast<std::uint32_t>(head.layer_index));
    for (std::size_t r = 0; r < c; ++r) {
      for (std::size_t k = 0; k < h; ++k) {
        w.F32(static_cast<float>(head.weight(static_cast<Eigen::Index>(r),
                                             static_cast<Eigen::Index>(k))));
      }
    }
    for (std::size_t r = 0; r < c; ++r) {
      w.F32(static_cast<float>(head.bias[static_cast<Eigen::Index>(r)]));
    }
  }
  internal::WriteFile(path, w.buffer());
}

std::vector<LayerHead> ReadHeads(const std::filesystem::path& path) {
  const std::string bytes = internal::ReadFile(path);
  internal::ByteReader r(bytes, path.string());
  internal::CheckMagic(r, "LHED");
  const std::uint32_t count = r.U32("header count");
  const std::uint32_t c = r.U32("header C");
  const std::uint32_t h = r.U32("header H");
  std::vector<LayerHead> heads(count);
  std::vector<float> wbuf(std::size_t{c} * h);
  std::vector<float> bbuf(c);
  for (auto& head : heads) {
    head.layer_index = r.U32("head layer index");
    r.F32s(wbuf, "head weights");
    r.F32s(bbuf, "head bias");
    head.weight.resize(c, h);
    head.bias.resize(c);
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t k = 0; k < h; ++k) {
        const float v = wbuf[i * h + k];
        if (!std::isfinite(v)) throw DataError("non-finite head weight");
        head.weight(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v;
      }
      if (!std::isfinite(bbuf[i])) throw DataError("non-finite head bias");
      head.bias[static_cast<Eigen::Index>(i)] = bbuf[i];
    }
  }
  if (r.remaining() != 0) {
    throw DataError(path.string() + ": trailing bytes after offset " +
                    std::to_string(r.offset()));
  }
  return heads;
}

}  // namespace logitdyn
