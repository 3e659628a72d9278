#include "logitdyn/dataset.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.h"
#include "logitdyn/errors.h"

namespace logitdyn {
namespace {

using internal::ByteReader;
using internal::ByteWriter;

constexpr std::size_t kMagicBytes = 6;

template <typename T>
std::size_t ArgMaxImpl(std::span<const T> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

void CheckFinite(std::span<const float> values, std::string_view what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      std::ostringstream msg;
      msg << "non-finite value in " << what << " at element " << i;
      throw DataError(msg.str());
    }
  }
}

void CheckLabels(std::span<const std::uint32_t> labels, std::size_t classes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) {
      std::ostringstream msg;
      msg << "true label " << labels[i] << " of example " << i
          << " outside [0, " << classes << ")";
      throw DataError(msg.str());
    }
  }
}

std::uint32_t CheckedU32(std::size_t v, std::string_view what) {
  if (v > 0xFFFFFFFFull) {
    throw DataError(std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

void WriteManifest(const std::filesystem::path& data_path,
                   nlohmann::json manifest,
                   const nlohmann::json& manifest_extra) {
  if (manifest_extra.is_object()) {
    for (auto it = manifest_extra.begin(); it != manifest_extra.end(); ++it) {
      manifest[it.key()] = it.value();
    }
  }
  internal::WriteFile(ManifestPath(data_path), manifest.dump(2) + "\n");
}

std::string DatasetIdFor(const std::filesystem::path& path) {
  const nlohmann::json manifest = ReadManifest(path);
  if (manifest.contains("dataset_id") && manifest["dataset_id"].is_string()) {
    return manifest["dataset_id"].get<std::string>();
  }
  return path.stem().string();
}

}  // namespace

std::size_t ArgMax(std::span<const float> values) {
  return ArgMaxImpl(values);
}
std::size_t ArgMax(std::span<const double> values) {
  return ArgMaxImpl(values);
}

TrajectoryDataset TrajectoryDataset::FromLogits(
    std::size_t classes, std::size_t depth, std::vector<float> logits,
    std::vector<std::uint32_t> true_labels, std::string dataset_id) {
  if (classes == 0) throw DataError("trajectory dataset needs >= 1 class");
  if (depth == 0) throw DataError("trajectory dataset needs depth >= 1");
  const std::size_t n = true_labels.size();
  if (logits.size() != n * depth * classes) {
    std::ostringstream msg;
    msg << "logit buffer has " << logits.size() << " values, expected "
        << n * depth * classes << " (N=" << n << ", D=" << depth
        << ", C=" << classes << ")";
    throw DataError(msg.str());
  }
  CheckFinite(logits, "trajectory logits");
  CheckLabels(true_labels, classes);

  TrajectoryDataset ds;
  ds.classes_ = classes;
  ds.depth_ = depth;
  ds.logits_ = std::move(logits);
  ds.true_label_ = std::move(true_labels);
  ds.dataset_id_ = std::move(dataset_id);
  ds.predicted_label_.resize(n);
  ds.error_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pred =
        static_cast<std::uint32_t>(ArgMax(ds.trajectory(i).final_row()));
    ds.predicted_label_[i] = pred;
    ds.error_[i] = pred != ds.true_label_[i] ? 1 : 0;
  }
  return ds;
}

TrajectoryDataset TrajectoryDataset::WithTrueLabels(
    std::vector<std::uint32_t> labels) const {
  return FromLogits(classes_, depth_, logits_, std::move(labels), dataset_id_);
}

bool operator==(const TrajectoryDataset& a, const TrajectoryDataset& b) {
  return a.classes_ == b.classes_ && a.depth_ == b.depth_ &&
         a.logits_ == b.logits_ && a.true_label_ == b.true_label_ &&
         a.predicted_label_ == b.predicted_label_ && a.error_ == b.error_ &&
         a.dataset_id_ == b.dataset_id_;
}

HiddenStateDataset HiddenStateDataset::FromStates(
    std::size_t layers, std::size_t hidden_dim, std::size_t classes,
    std::vector<float> states, std::vector<std::uint32_t> true_labels,
    std::vector<float> classifier_logits, std::string dataset_id) {
  if (layers == 0 || hidden_dim == 0 || classes == 0) {
    throw DataError("hidden-state dataset needs layers, H and C >= 1");
  }
  const std::size_t n = true_labels.size();
  if (states.size() != n * layers * hidden_dim) {
    std::ostringstream msg;
    msg << "hidden-state buffer has " << states.size() << " values, expected "
        << n * layers * hidden_dim;
    throw DataError(msg.str());
  }
  if (classifier_logits.size() != n * classes) {
    std::ostringstream msg;
    msg << "classifier logit buffer has " << classifier_logits.size()
        << " values, expected " << n * classes;
    throw DataError(msg.str());
  }
  CheckFinite(states, "hidden states");
  CheckFinite(classifier_logits, "classifier logits");
  CheckLabels(true_labels, classes);

  HiddenStateDataset ds;
  ds.layers_ = layers;
  ds.hidden_dim_ = hidden_dim;
  ds.classes_ = classes;
  ds.states_ = std::move(states);
  ds.true_label_ = std::move(true_labels);
  ds.classifier_logits_ = std::move(classifier_logits);
  ds.dataset_id_ = std::move(dataset_id);
  ds.predicted_label_.resize(n);
  ds.error_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto pred =
        static_cast<std::uint32_t>(ArgMax(ds.classifier_logits(i)));
    ds.predicted_label_[i] = pred;
    ds.error_[i] = pred != ds.true_label_[i] ? 1 : 0;
  }
  return ds;
}

bool operator==(const HiddenStateDataset& a, const HiddenStateDataset& b) {
  return a.layers_ == b.layers_ && a.hidden_dim_ == b.hidden_dim_ &&
         a.classes_ == b.classes_ && a.states_ == b.states_ &&
         a.true_label_ == b.true_label_ &&
         a.classifier_logits_ == b.classifier_logits_ &&
         a.dataset_id_ == b.dataset_id_;
}

std::filesystem::path ManifestPath(const std::filesystem::path& data_path) {
  std::filesystem::path out = data_path;
  out.replace_filename(data_path.stem().string() + ".manifest.json");
  return out;
}

nlohmann::json ReadManifest(const std::filesystem::path& data_path) {
  const auto path = ManifestPath(data_path);
  std::ifstream in(path);
  if (!in) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": invalid manifest JSON: " + e.what());
  }
}

TrajectoryDataset LoadTrajectories(const std::filesystem::path& path) {
  const std::string bytes = internal::ReadFile(path);
  ByteReader reader(bytes, path.string());
  internal::CheckMagic(reader, "LTRJ");
  const std::uint32_t n = reader.U32("header N");
  const std::uint32_t classes = reader.U32("header C");
  const std::uint32_t depth = reader.U32("header D");
  const std::uint32_t flags = reader.U32("header flags");
  if (flags != 0) {
    throw DataError(path.string() + ": unsupported LTRJ flags " +
                    std::to_string(flags));
  }
  if (classes == 0 || depth == 0) {
    throw DataError(path.string() + ": header has C=0 or D=0");
  }
  const std::uint64_t record_bytes =
      std::uint64_t{depth} * classes * 4 + 8;
  const std::uint64_t expected = kMagicBytes + 16 + record_bytes * n;
  if (bytes.size() > expected) {
    std::ostringstream msg;
    msg << path.string() << ": " << bytes.size() - expected
        << " trailing bytes after offset " << expected
        << " (header inconsistent with payload length)";
    throw DataError(msg.str());
  }

  const std::size_t row = std::size_t{depth} * classes;
  std::vector<float> logits(std::size_t{n} * row);
  std::vector<std::uint32_t> labels(n);
  std::vector<std::uint32_t> stored_pred(n);
  for (std::size_t i = 0; i < n; ++i) {
    reader.F32s(std::span<float>(logits).subspan(i * row, row),
                "record logits");
    labels[i] = reader.U32("record true label");
    stored_pred[i] = reader.U32("record predicted label");
  }

  TrajectoryDataset ds = TrajectoryDataset::FromLogits(
      classes, depth, std::move(logits), std::move(labels), DatasetIdFor(path));
  for (std::size_t i = 0; i < n; ++i) {
    if (stored_pred[i] != ds.predicted_label(i)) {
      std::ostringstream msg;
      msg << path.string() << ": corrupted record " << i
          << ": stored predicted label " << stored_pred[i]
          << " disagrees with final-depth argmax " << ds.predicted_label(i);
      throw DataError(msg.str());
    }
  }
  return ds;
}

void WriteTrajectories(const TrajectoryDataset& ds,
                       const std::filesystem::path& path,
                       const nlohmann::json& manifest_extra) {
  ByteWriter w;
  w.Bytes(internal::Magic("LTRJ"));
  w.U32(CheckedU32(ds.size(), "N"));
  w.U32(CheckedU32(ds.classes(), "C"));
  w.U32(CheckedU32(ds.depth(), "D"));
  w.U32(0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    w.F32s(ds.trajectory(i).data());
    w.U32(ds.true_label(i));
    w.U32(ds.predicted_label(i));
  }
  internal::WriteFile(path, w.buffer());
  WriteManifest(path,
                {{"format", "LTRJ"},
                 {"format_version", 1},
                 {"dataset_id", ds.dataset_id()},
                 {"n_examples", ds.size()},
                 {"n_classes", ds.classes()},
                 {"depth", ds.depth()}},
                manifest_extra);
}

HiddenStateDataset LoadHiddenStates(const std::filesystem::path& path) {
  const std::string bytes = internal::ReadFile(path);
  ByteReader reader(bytes, path.string());
  internal::CheckMagic(reader, "LHID");
  const std::uint32_t n = reader.U32("header N");
  const std::uint32_t layers = reader.U32("header T");
  const std::uint32_t hidden = reader.U32("header H");
  const std::uint32_t classes = reader.U32("header C");
  if (layers == 0 || hidden == 0 || classes == 0) {
    throw DataError(path.string() + ": header has a zero dimension");
  }
  const std::uint64_t record_bytes =
      std::uint64_t{layers} * hidden * 4 + 4 + std::uint64_t{classes} * 4;
  const std::uint64_t expected = kMagicBytes + 16 + record_bytes * n;
  if (bytes.size() > expected) {
    std::ostringstream msg;
    msg << path.string() << ": " << bytes.size() - expected
        << " trailing bytes after offset " << expected
        << " (header inconsistent with payload length)";
    throw DataError(msg.str());
  }

  const std::size_t state_row = std::size_t{layers} * hidden;
  std::vector<float> states(std::size_t{n} * state_row);
  std::vector<std::uint32_t> labels(n);
  std::vector<float> clf(std::size_t{n} * classes);
  for (std::size_t i = 0; i < n; ++i) {
    reader.F32s(std::span<float>(states).subspan(i * state_row, state_row),
                "record hidden states");
    labels[i] = reader.U32("record true label");
    reader.F32s(std::span<float>(clf).subspan(i * classes, classes),
                "record classifier logits");
  }
  return HiddenStateDataset::FromStates(layers, hidden, classes,
                                        std::move(states), std::move(labels),
                                        std::move(clf), DatasetIdFor(path));
}

void WriteHiddenStates(const HiddenStateDataset& ds,
                       const std::filesystem::path& path,
                       const nlohmann::json& manifest_extra) {
  ByteWriter w;
  w.Bytes(internal::Magic("LHID"));
  w.U32(CheckedU32(ds.size(), "N"));
  w.U32(CheckedU32(ds.layers(), "T"));
  w.U32(CheckedU32(ds.hidden_dim(), "H"));
  w.U32(CheckedU32(ds.classes(), "C"));
  const std::size_t state_row = ds.layers() * ds.hidden_dim();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    w.F32s(std::span<const float>(ds.states()).subspan(i * state_row,
                                                         state_row));
    w.U32(ds.true_label(i));
    w.F32s(ds.classifier_logits(i));
  }
  internal::WriteFile(path, w.buffer());
  WriteManifest(path,
                {{"format", "LHID"},
                 {"format_version", 1},
                 {"dataset_id", ds.dataset_id()},
                 {"n_examples", ds.size()},
                 {"n_layers", ds.layers()},
                 {"hidden_dim", ds.hidden_dim()},
                 {"n_classes", ds.classes()}},
                manifest_extra);
}

FileHeader ReadHeader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string head(kMagicBytes + 16, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  ByteReader reader(head, path.string());

  FileHeader h;
  h.file_bytes = std::filesystem::file_size(path);
  const std::string_view magic = head.substr(0, std::min<std::size_t>(4, head.size()));
  if (magic == "LTRJ") {
    internal::CheckMagic(reader, "LTRJ");
    h.format = "LTRJ";
    h.n = reader.U32("header N");
    h.classes = reader.U32("header C");
    h.depth = reader.U32("header D");
    h.flags = reader.U32("header flags");
    h.expected_bytes = kMagicBytes + 16 +
                       (std::uint64_t{h.depth} * h.classes * 4 + 8) * h.n;
  } else if (magic == "LHID") {
    internal::CheckMagic(reader, "LHID");
    h.format = "LHID";
    h.n = reader.U32("header N");
    h.layers = reader.U32("header T");
    h.hidden_dim = reader.U32("header H");
    h.classes = reader.U32("header C");
    h.expected_bytes =
        kMagicBytes + 16 +
        (std::uint64_t{h.layers} * h.hidden_dim * 4 + 4 +
         std::uint64_t{h.classes} * 4) *
            h.n;
  } else {
    throw DataError(path.string() + ": bad magic, not an LTRJ or LHID file");
  }
  return h;
}

}  // namespace logitdyn
