#include "logitdyn/experiments.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <set>

#include "logitdyn/errors.h"
#include "logitdyn/features.h"
#include "logitdyn/heads.h"
#include "logitdyn/metrics.h"
#include "logitdyn/parallel.h"

namespace logitdyn {
namespace {

// One candidate source of logit trajectories. Without hidden states there is
// a single variant (the stored trajectories, or the classifier row alone);
// with hidden states there is one per head-training configuration.
struct TrajVariant {
  std::optional<HeadTrainConfig> head;
  TrajectoryDataset traj;
};

struct Prepared {
  const DatasetBundle* bundle = nullptr;
  SplitAssignment split;
  std::vector<TrajVariant> variants;
  std::optional<MahalanobisModel> maha;
};

// A fitted method on one dataset plus what is needed to transfer it.
struct Fitted {
  Method method = Method::kLogitDynamics;
  std::optional<double> val;
  std::optional<double> test;
  nlohmann::json hp = nlohmann::json::object();
  std::string note;
  std::optional<ProbeModel> probe;
  std::size_t variant = 0;
  std::size_t last_l = 0;
  std::size_t top_k = 0;
  std::size_t layer = 0;
  bool dynamics = true;
};

struct Grids {
  std::vector<std::size_t> last_l;
  std::vector<std::size_t> top_k;
};

struct Candidate {
  std::optional<ProbeModel> model;
  std::optional<double> val;
  std::optional<double> test;
};

std::string Timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool Enabled(const std::vector<Method>& methods, Method m) {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

std::vector<std::size_t> Filter(const std::vector<std::size_t>& grid,
                                std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (std::size_t v : grid) {
    if (v >= lo && v <= hi &&
        std::find(out.begin(), out.end(), v) == out.end()) {
      out.push_back(v);
    }
  }
  return out;
}

std::optional<double> SubsetAp(std::span<const double> scores,
                               std::span<const std::uint8_t> labels) {
  std::size_t pos = 0;
  for (std::uint8_t l : labels) pos += l;
  if (pos == 0 || pos == labels.size()) return std::nullopt;
  return AveragePrecision(scores, labels).aucpr;
}

std::vector<std::uint8_t> Gather(const std::vector<std::uint8_t>& labels,
                                 const std::vector<std::size_t>& rows) {
  std::vector<std::uint8_t> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(labels[r]);
  return out;
}

std::vector<double> Gather(const std::vector<double>& values,
                           const std::vector<std::size_t>& rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(values[r]);
  return out;
}

std::optional<double> TestAp(const ProbeModel& model, const FeatureMatrix& x,
                             const SplitAssignment& split) {
  return SubsetAp(model.ScoreRows(x, split.test), Gather(x.labels(), split.test));
}

Candidate TrainCandidate(const FeatureMatrix& x, const SplitAssignment& split,
                         const ProbeHyperParams& hp) {
  Candidate c;
  c.model = TrainProbe(x, split, hp);
  c.val = c.model->val_aucpr;
  c.test = TestAp(*c.model, x, split);
  return c;
}

// First candidate with the highest probe-val AUCPR (missing values lose).
std::size_t SelectBest(const std::vector<Candidate>& cands) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const auto& a = cands[i].val;
    const auto& b = cands[best].val;
    if (a && (!b || *a > *b)) best = i;
  }
  return best;
}

std::vector<std::size_t> LastColumns(std::size_t total, std::size_t count) {
  std::vector<std::size_t> cols(count);
  for (std::size_t j = 0; j < count; ++j) cols[j] = total - count + j;
  return cols;
}

std::vector<std::size_t> LinearProbeLayers(const ExperimentConfig& cfg,
                                           std::size_t layers) {
  std::vector<std::size_t> grid = cfg.linear_probe_layers;
  if (grid.empty()) {
    for (std::size_t q = 1; q <= 4; ++q) grid.push_back(q * layers / 4);
    for (std::size_t& g : grid) g = g == 0 ? 0 : g - 1;
  }
  return Filter(grid, 0, layers - 1);
}

std::vector<HeadTrainConfig> HeadGrid(const ExperimentConfig& cfg) {
  std::vector<HeadTrainConfig> out;
  for (double lr : cfg.head_lr_grid) {
    for (std::size_t epochs : cfg.head_epochs_grid) {
      out.push_back(HeadTrainConfig{.learning_rate = lr,
                                    .epochs = epochs,
                                    .batch_size = cfg.head_batch_size,
                                    .weight_decay = cfg.head_weight_decay,
                                    .seed = cfg.seed});
    }
  }
  return out;
}

Prepared Prepare(const DatasetBundle& bundle, const ExperimentConfig& cfg,
                 const std::vector<Method>& methods, const Grids& grids,
                 const SplitAssignment* split_override) {
  bundle.Validate();
  Prepared p;
  p.bundle = &bundle;
  if (split_override) {
    p.split = *split_override;
  } else {
    p.split = StratifiedSplit(bundle.errors(), bundle.p_probe, cfg.seed);
  }
  p.split.Validate(bundle.size());

  const bool wants_heads = Enabled(methods, Method::kLogitDynamics) &&
                           bundle.hidden && !cfg.head_lr_grid.empty() &&
                           !cfg.head_epochs_grid.empty();
  if (wants_heads) {
    const HiddenStateDataset& hs = *bundle.hidden;
    const auto valid = Filter(grids.last_l, 1, hs.layers());
    if (valid.empty()) {
      throw ConfigError(bundle.name + ": no last_l value fits " +
                        std::to_string(hs.layers()) + " hidden layers");
    }
    const std::size_t l_max = *std::max_element(valid.begin(), valid.end());
    const auto layers = SuffixLayers(hs.layers(), l_max);
    for (const HeadTrainConfig& hc : HeadGrid(cfg)) {
      const auto heads =
          TrainLayerHeads(hs, layers, hc, p.split.head_train, cfg.jobs);
      p.variants.push_back({hc, ProjectToTrajectories(hs, heads, l_max)});
    }
  } else if (bundle.trajectories) {
    p.variants.push_back({std::nullopt, *bundle.trajectories});
  } else {
    p.variants.push_back(
        {std::nullopt, ProjectToTrajectories(*bundle.hidden, {}, 0)});
  }

  if (Enabled(methods, Method::kMahalanobis) && bundle.hidden) {
    const HiddenStateDataset& hs = *bundle.hidden;
    const auto valid = Filter(grids.last_l, 1, hs.layers());
    if (!valid.empty()) {
      const std::size_t l_max = *std::max_element(valid.begin(), valid.end());
      p.maha = FitMahalanobis(hs, p.split.head_train,
                              SuffixLayers(hs.layers(), l_max));
    }
  }
  return p;
}

nlohmann::json SplitSummary(const SplitAssignment& s,
                            const std::vector<std::uint8_t>& errors) {
  auto positives = [&](const std::vector<std::size_t>& rows) {
    std::size_t n = 0;
    for (std::size_t r : rows) n += errors[r];
    return n;
  };
  return {{"seed", s.seed},
          {"p_probe", s.p_probe},
          {"test_fraction", s.test_fraction},
          {"probe_train_fraction", s.probe_train_fraction},
          {"sizes",
           {{"head_train", s.head_train.size()},
            {"probe_train", s.probe_train.size()},
            {"probe_val", s.probe_val.size()},
            {"test", s.test.size()}}},
          {"positives",
           {{"head_train", positives(s.head_train)},
            {"probe_train", positives(s.probe_train)},
            {"probe_val", positives(s.probe_val)},
            {"test", positives(s.test)}}}};
}

Fitted FitScalar(const Prepared& p, const ExperimentConfig& cfg, Method m) {
  Fitted f;
  f.method = m;
  const auto& traj = p.variants.front().traj;
  const auto scores = ScalarErrorScores(traj, m, cfg.energy_temperature);
  const auto& errors = traj.errors();
  f.val = SubsetAp(Gather(scores, p.split.probe_val),
                   Gather(errors, p.split.probe_val));
  f.test = SubsetAp(Gather(scores, p.split.test), Gather(errors, p.split.test));
  if (m == Method::kEnergy) f.hp = {{"temperature", cfg.energy_temperature}};
  return f;
}

Fitted FitTopK(const Prepared& p, const ExperimentConfig& cfg,
               const Grids& grids) {
  Fitted f;
  f.method = Method::kTopKLogits;
  const auto& traj = p.variants.front().traj;
  const auto ks = Filter(grids.top_k, 1, traj.classes());
  if (ks.empty()) {
    f.note = "skipped: no top_k value fits the class count";
    return f;
  }
  std::vector<Candidate> cands(ks.size());
  ParallelFor(ks.size(), cfg.jobs, [&](std::size_t i) {
    cands[i] = TrainCandidate(TopKLogitMatrix(traj, ks[i]), p.split, cfg.probe);
  });
  const std::size_t best = SelectBest(cands);
  f.val = cands[best].val;
  f.test = cands[best].test;
  f.probe = std::move(cands[best].model);
  f.top_k = ks[best];
  f.hp = {{"top_k", f.top_k}};
  return f;
}

Fitted FitLogitDynamics(const Prepared& p, const ExperimentConfig& cfg,
                        const Grids& grids, bool dynamics) {
  Fitted f;
  f.method = Method::kLogitDynamics;
  f.dynamics = dynamics;
  struct Point {
    std::size_t variant, last_l, top_k;
  };
  std::vector<Point> points;
  for (std::size_t v = 0; v < p.variants.size(); ++v) {
    const auto& traj = p.variants[v].traj;
    if (traj.classes() < 2) continue;
    for (std::size_t l : Filter(grids.last_l, 0, traj.depth() - 1)) {
      for (std::size_t k : Filter(grids.top_k, 1, traj.classes() - 1)) {
        points.push_back({v, l, k});
      }
    }
  }
  if (points.empty()) {
    f.note = "skipped: no (last_l, top_k) candidate fits the trajectories";
    return f;
  }
  std::vector<Candidate> cands(points.size());
  ParallelFor(points.size(), cfg.jobs, [&](std::size_t i) {
    const Point& pt = points[i];
    const FeatureMatrix x =
        BuildFeatures(p.variants[pt.variant].traj,
                      FeatureConfig{pt.last_l, pt.top_k, dynamics});
    cands[i] = TrainCandidate(x, p.split, cfg.probe);
  });
  const std::size_t best = SelectBest(cands);
  const Point& pt = points[best];
  f.val = cands[best].val;
  f.test = cands[best].test;
  f.probe = std::move(cands[best].model);
  f.variant = pt.variant;
  f.last_l = pt.last_l;
  f.top_k = pt.top_k;
  const auto& head = p.variants[pt.variant].head;
  f.hp = {{"last_l", pt.last_l},
          {"top_k", pt.top_k},
          {"dynamics", dynamics},
          {"heads", head ? head->ToJson() : nlohmann::json()},
          {"best_epoch", f.probe->best_epoch}};
  return f;
}

Fitted FitMahalanobisMethod(const Prepared& p, const ExperimentConfig& cfg,
                            const Grids& grids) {
  Fitted f;
  f.method = Method::kMahalanobis;
  if (!p.bundle->hidden) {
    f.note = "skipped: no hidden-state file";
    return f;
  }
  if (!p.maha) {
    f.note = "skipped: no last_l value fits the hidden layers";
    return f;
  }
  const FeatureMatrix full = MahalanobisFeatures(*p.maha, *p.bundle->hidden);
  const auto ls = Filter(grids.last_l, 1, full.cols());
  std::vector<Candidate> cands(ls.size());
  ParallelFor(ls.size(), cfg.jobs, [&](std::size_t i) {
    const auto cols = LastColumns(full.cols(), ls[i]);
    cands[i] = TrainCandidate(full.SelectColumns(cols), p.split, cfg.probe);
  });
  const std::size_t best = SelectBest(cands);
  f.val = cands[best].val;
  f.test = cands[best].test;
  f.probe = std::move(cands[best].model);
  f.last_l = ls[best];
  f.hp = {{"last_l", f.last_l}};
  return f;
}

Fitted FitLinearProbe(const Prepared& p, const ExperimentConfig& cfg) {
  Fitted f;
  f.method = Method::kLinearProbe;
  if (!p.bundle->hidden) {
    f.note = "skipped: no hidden-state file";
    return f;
  }
  const HiddenStateDataset& hs = *p.bundle->hidden;
  const auto layers = LinearProbeLayers(cfg, hs.layers());
  if (layers.empty()) {
    f.note = "skipped: no linear-probe layer in range";
    return f;
  }
  std::vector<Candidate> cands(layers.size());
  ParallelFor(layers.size(), cfg.jobs, [&](std::size_t i) {
    cands[i] = TrainCandidate(LinearProbeFeatures(hs, layers[i]), p.split,
                              cfg.probe);
  });
  const std::size_t best = SelectBest(cands);
  f.val = cands[best].val;
  f.test = cands[best].test;
  f.probe = std::move(cands[best].model);
  f.layer = layers[best];
  f.hp = {{"layer", f.layer}};
  return f;
}

Fitted FitMethod(const Prepared& p, const ExperimentConfig& cfg, Method m,
                 const Grids& grids, bool dynamics) {
  if (IsScalarMethod(m)) return FitScalar(p, cfg, m);
  switch (m) {
    case Method::kTopKLogits:
      return FitTopK(p, cfg, grids);
    case Method::kLogitDynamics:
      return FitLogitDynamics(p, cfg, grids, dynamics);
    case Method::kMahalanobis:
      return FitMahalanobisMethod(p, cfg, grids);
    case Method::kLinearProbe:
      return FitLinearProbe(p, cfg);
    default:
      throw ConfigError("unsupported method");
  }
}

// AUCPR of `src` (fitted on its own dataset) evaluated on `tgt`. The target
// contributes heads (via tgt_fit's head variant), Gaussians and
// normalization statistics; the probe weights come from the source.
std::optional<double> Transfer(const Fitted& src, const Prepared& tgt,
                               const Fitted& tgt_fit, const std::string& src_name,
                               std::vector<std::string>& warnings) {
  const std::string& tgt_name = tgt.bundle->name;
  if (IsScalarMethod(src.method)) return tgt_fit.test;
  if (!src.probe) return std::nullopt;
  auto refit_and_score = [&](const FeatureMatrix& x) {
    const ProbeModel model = src.probe->WithStandardizer(
        Standardizer::Fit(x, tgt.split.probe_train, "target_probe_train"));
    return TestAp(model, x, tgt.split);
  };
  switch (src.method) {
    case Method::kTopKLogits: {
      const auto& traj = tgt.variants.front().traj;
      if (src.top_k > traj.classes()) {
        warnings.push_back("topk_logits " + src_name + "->" + tgt_name +
                           ": K exceeds target class count");
        return std::nullopt;
      }
      return refit_and_score(TopKLogitMatrix(traj, src.top_k));
    }
    case Method::kLogitDynamics: {
      const auto& traj = tgt.variants[tgt_fit.probe ? tgt_fit.variant : 0].traj;
      const FeatureConfig fc{src.last_l, src.top_k, src.dynamics};
      try {
        fc.ValidateFor(traj.classes(), traj.depth());
      } catch (const ConfigError& e) {
        throw DataError("feature-dimension mismatch transferring " + src_name +
                        " -> " + tgt_name + ": " + e.what());
      }
      return refit_and_score(BuildFeatures(traj, fc));
    }
    case Method::kMahalanobis: {
      if (!tgt.maha || src.last_l > tgt.maha->layers.size()) {
        warnings.push_back("mahalanobis " + src_name + "->" + tgt_name +
                           ": target lacks the required layers");
        return std::nullopt;
      }
      const FeatureMatrix full = MahalanobisFeatures(*tgt.maha, *tgt.bundle->hidden);
      const auto cols = LastColumns(full.cols(), src.last_l);
      return refit_and_score(full.SelectColumns(cols));
    }
    case Method::kLinearProbe: {
      const auto& hs = tgt.bundle->hidden;
      if (!hs || src.layer >= hs->layers() ||
          hs->hidden_dim() != src.probe->features()) {
        warnings.push_back("linear_probe " + src_name + "->" + tgt_name +
                           ": hidden-state shape mismatch");
        return std::nullopt;
      }
      return refit_and_score(LinearProbeFeatures(*hs, src.layer));
    }
    default:
      return std::nullopt;
  }
}

struct Run {
  std::vector<Prepared> preps;
  // fits[d][m] for dataset d and method index m in `methods`.
  std::vector<std::vector<Fitted>> fits;
  std::vector<Method> methods;
};

Grids InDistributionGrids(const ExperimentConfig& cfg) {
  return {cfg.last_l_grid, cfg.top_k_grid};
}

Grids CrossGrids(const ExperimentConfig& cfg) {
  Grids g = InDistributionGrids(cfg);
  if (cfg.cross_last_l) g.last_l = {*cfg.cross_last_l};
  if (cfg.cross_top_k) g.top_k = {*cfg.cross_top_k};
  return g;
}

std::vector<Method> Deduplicated(const std::vector<Method>& methods) {
  std::vector<Method> out;
  for (Method m : methods) {
    if (!Enabled(out, m)) out.push_back(m);
  }
  return out;
}

std::vector<Prepared> PrepareAll(const std::vector<DatasetBundle>& bundles,
                                 const ExperimentConfig& cfg,
                                 const std::vector<Method>& methods,
                                 const Grids& grids,
                                 const std::vector<SplitAssignment>* splits) {
  if (bundles.empty()) throw ConfigError("experiment needs at least one dataset");
  if (splits && splits->size() != bundles.size()) {
    throw ConfigError("one split per dataset is required");
  }
  std::set<std::string> names;
  for (const auto& b : bundles) {
    if (!names.insert(b.name).second) {
      throw ConfigError("duplicate dataset name '" + b.name + "'");
    }
  }
  std::vector<Prepared> preps;
  preps.reserve(bundles.size());
  for (std::size_t d = 0; d < bundles.size(); ++d) {
    preps.push_back(Prepare(bundles[d], cfg, methods, grids,
                            splits ? &(*splits)[d] : nullptr));
  }
  return preps;
}

void FitAll(Run& run, const ExperimentConfig& cfg, const Grids& grids,
            bool dynamics, std::vector<std::string>& warnings) {
  run.fits.clear();
  for (const auto& p : run.preps) {
    std::vector<Fitted> per;
    for (Method m : run.methods) {
      per.push_back(FitMethod(p, cfg, m, grids, dynamics));
      if (!per.back().note.empty()) {
        warnings.push_back(std::string(MethodName(m)) + " on " +
                           p.bundle->name + ": " + per.back().note);
      }
    }
    run.fits.push_back(std::move(per));
  }
}

LabeledMatrix CrossMatrixFor(const Run& run, std::size_t method_index,
                             const ExperimentConfig& cfg,
                             std::vector<std::string>& warnings) {
  std::vector<std::string> labels;
  for (const auto& p : run.preps) labels.push_back(p.bundle->name);
  LabeledMatrix m = LabeledMatrix::Empty(labels, labels);
  const std::size_t n = run.preps.size();
  std::vector<std::vector<std::string>> cell_warnings(n * n);
  ParallelFor(n * n, cfg.jobs, [&](std::size_t cell) {
    const std::size_t s = cell / n;
    const std::size_t t = cell % n;
    m.values[s][t] = Transfer(run.fits[s][method_index], run.preps[t],
                              run.fits[t][method_index], labels[s],
                              cell_warnings[cell]);
  });
  for (auto& w : cell_warnings) {
    warnings.insert(warnings.end(), w.begin(), w.end());
  }
  return m;
}

EvalReport BaseReport(const std::string& kind, const Run& run,
                      const ExperimentConfig& cfg) {
  EvalReport r;
  r.kind = kind;
  r.run_id = cfg.run_id;
  r.config = cfg.ToJson();
  r.generated_at = Timestamp();
  for (const auto& p : run.preps) {
    DatasetSummary s;
    s.name = p.bundle->name;
    s.n_examples = p.bundle->size();
    s.n_classes = p.bundle->classes();
    std::size_t errors = 0;
    for (std::uint8_t e : p.bundle->errors()) errors += e;
    s.misclassification_rate =
        s.n_examples ? static_cast<double>(errors) / s.n_examples : 0.0;
    s.split = SplitSummary(p.split, p.bundle->errors());
    r.datasets.push_back(std::move(s));
  }
  return r;
}

void AppendResults(EvalReport& r, const Run& run,
                   const std::string& variant = {}) {
  for (std::size_t d = 0; d < run.preps.size(); ++d) {
    std::map<std::string, double> test_by_method;
    for (const Fitted& f : run.fits[d]) {
      MethodResult mr;
      mr.method = f.method;
      mr.dataset = run.preps[d].bundle->name;
      mr.val_aucpr = f.val;
      mr.test_aucpr = f.test;
      mr.hyperparameters = f.hp;
      mr.note = f.note;
      mr.variant = variant;
      r.results.push_back(std::move(mr));
      if (f.test) test_by_method[std::string(MethodName(f.method))] = *f.test;
    }
    const std::string& name = run.preps[d].bundle->name;
    r.deltas[name] = ComputeDelta(test_by_method);
    std::map<std::string, double> pair;
    for (const char* m : {"logit_dynamics", "topk_logits"}) {
      const auto it = test_by_method.find(m);
      if (it != test_by_method.end()) pair.insert(*it);
    }
    r.deltas_vs_topk[name] = ComputeDelta(pair);
  }
}

}  // namespace

std::size_t DatasetBundle::size() const {
  return trajectories ? trajectories->size() : (hidden ? hidden->size() : 0);
}

std::size_t DatasetBundle::classes() const {
  return trajectories ? trajectories->classes()
                      : (hidden ? hidden->classes() : 0);
}

const std::vector<std::uint8_t>& DatasetBundle::errors() const {
  if (trajectories) return trajectories->errors();
  if (hidden) return hidden->errors();
  throw DataError("dataset '" + name + "' has neither trajectories nor hidden "
                  "states");
}

void DatasetBundle::Validate() const {
  if (!trajectories && !hidden) {
    throw DataError("dataset '" + name + "' has neither trajectories nor "
                    "hidden states");
  }
  if (trajectories && hidden) {
    if (trajectories->size() != hidden->size() ||
        trajectories->classes() != hidden->classes() ||
        trajectories->true_labels() != hidden->true_labels() ||
        trajectories->errors() != hidden->errors()) {
      throw DataError("dataset '" + name + "': trajectory and hidden-state "
                      "files describe different examples");
    }
  }
}

DatasetBundle LoadBundle(const DatasetSpec& spec) {
  DatasetBundle b;
  b.name = spec.name;
  b.p_probe = spec.p_probe;
  if (!spec.trajectories.empty()) {
    b.trajectories = LoadTrajectories(spec.trajectories);
  }
  if (!spec.hidden_states.empty()) {
    b.hidden = LoadHiddenStates(spec.hidden_states);
  }
  if (b.name.empty()) {
    b.name = b.trajectories ? b.trajectories->dataset_id()
                            : (b.hidden ? b.hidden->dataset_id() : "");
  }
  b.Validate();
  return b;
}

void ExperimentConfig::Validate() const {
  if (last_l_grid.empty()) throw ConfigError("last_l grid is empty");
  if (top_k_grid.empty()) throw ConfigError("top_k grid is empty");
  if (methods.empty()) throw ConfigError("no methods enabled");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
  if (head_batch_size == 0) throw ConfigError("head batch size must be >= 1");
  if (!(energy_temperature > 0.0)) {
    throw ConfigError("energy temperature must be positive");
  }
  for (double lr : head_lr_grid) {
    if (!(lr > 0.0)) throw ConfigError("head learning rates must be positive");
  }
  probe.Validate();
  for (const auto& d : datasets) {
    if (d.trajectories.empty() && d.hidden_states.empty()) {
      throw ConfigError("dataset '" + d.name + "' lists no files");
    }
    if (!(d.p_probe > 0.0 && d.p_probe < 1.0)) {
      throw ConfigError("dataset '" + d.name + "': p_probe must be in (0, 1)");
    }
  }
}

nlohmann::json ExperimentConfig::ToJson() const {
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : datasets) {
    ds.push_back({{"name", d.name},
                  {"trajectories", d.trajectories.string()},
                  {"hidden_states", d.hidden_states.string()},
                  {"p_probe", d.p_probe}});
  }
  std::vector<std::string> method_names;
  for (Method m : methods) method_names.emplace_back(MethodName(m));
  nlohmann::json j = {{"run_id", run_id},
                      {"output_dir", output_dir.string()},
                      {"datasets", ds},
                      {"methods", method_names},
                      {"last_l", last_l_grid},
                      {"top_k", top_k_grid},
                      {"head_lr", head_lr_grid},
                      {"head_epochs", head_epochs_grid},
                      {"head_batch_size", head_batch_size},
                      {"head_weight_decay", head_weight_decay},
                      {"probe", probe.ToJson()},
                      {"linear_probe_layers", linear_probe_layers},
                      {"energy_temperature", energy_temperature},
                      {"seed", seed}};
  j["cross_last_l"] =
      cross_last_l ? nlohmann::json(*cross_last_l) : nlohmann::json();
  j["cross_top_k"] =
      cross_top_k ? nlohmann::json(*cross_top_k) : nlohmann::json();
  return j;
}

ExperimentConfig ExperimentConfig::FromJson(const nlohmann::json& j,
                                            const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  auto resolve = [&](const std::string& p) -> std::filesystem::path {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    static const std::set<std::string> kKnown = {
        "run_id", "output_dir", "datasets", "methods", "last_l", "top_k",
        "head_lr", "head_epochs", "head_batch_size", "head_weight_decay",
        "probe", "linear_probe_layers", "energy_temperature", "seed", "jobs",
        "cross_last_l", "cross_top_k"};
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!kKnown.count(it.key())) {
        throw ConfigError("unknown config key '" + it.key() + "'");
      }
    }
    cfg.run_id = j.value("run_id", cfg.run_id);
    if (j.contains("output_dir")) {
      cfg.output_dir = resolve(j["output_dir"].get<std::string>());
    }
    for (const auto& d : j.at("datasets")) {
      DatasetSpec spec;
      spec.name = d.value("name", std::string());
      spec.trajectories = resolve(d.value("trajectories", std::string()));
      spec.hidden_states = resolve(d.value("hidden_states", std::string()));
      spec.p_probe = d.value("p_probe", 0.2);
      cfg.datasets.push_back(std::move(spec));
    }
    if (j.contains("methods")) {
      const auto& m = j["methods"];
      if (m.is_string() && m.get<std::string>() == "all") {
        cfg.methods = AllMethods();
      } else {
        cfg.methods.clear();
        for (const auto& name : m) {
          const auto parsed = ParseMethod(name.get<std::string>());
          if (!parsed) {
            throw ConfigError("unknown method '" + name.get<std::string>() +
                              "'");
          }
          cfg.methods.push_back(*parsed);
        }
      }
    }
    cfg.last_l_grid = j.value("last_l", cfg.last_l_grid);
    cfg.top_k_grid = j.value("top_k", cfg.top_k_grid);
    cfg.head_lr_grid = j.value("head_lr", cfg.head_lr_grid);
    cfg.head_epochs_grid = j.value("head_epochs", cfg.head_epochs_grid);
    cfg.head_batch_size = j.value("head_batch_size", cfg.head_batch_size);
    cfg.head_weight_decay = j.value("head_weight_decay", cfg.head_weight_decay);
    if (j.contains("probe")) {
      const auto& p = j["probe"];
      cfg.probe.learning_rate = p.value("learning_rate", cfg.probe.learning_rate);
      cfg.probe.epochs = p.value("epochs", cfg.probe.epochs);
      cfg.probe.batch_size = p.value("batch_size", cfg.probe.batch_size);
      cfg.probe.weight_decay = p.value("weight_decay", cfg.probe.weight_decay);
      cfg.probe.select_best_epoch =
          p.value("select_best_epoch", cfg.probe.select_best_epoch);
    }
    cfg.linear_probe_layers =
        j.value("linear_probe_layers", cfg.linear_probe_layers);
    cfg.energy_temperature =
        j.value("energy_temperature", cfg.energy_temperature);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.probe.seed = cfg.seed;
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (j.contains("cross_last_l") && !j["cross_last_l"].is_null()) {
      cfg.cross_last_l = j["cross_last_l"].get<std::size_t>();
    }
    if (j.contains("cross_top_k") && !j["cross_top_k"].is_null()) {
      cfg.cross_top_k = j["cross_top_k"].get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
  if (cfg.datasets.empty()) throw ConfigError("config lists no datasets");
  cfg.Validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return FromJson(j, path.parent_path());
}

EvalReport RunInDistribution(const std::vector<DatasetBundle>& bundles,
                             const ExperimentConfig& cfg,
                             const std::vector<SplitAssignment>* splits) {
  cfg.Validate();
  const Grids grids = InDistributionGrids(cfg);
  Run run;
  run.methods = Deduplicated(cfg.methods);
  std::vector<std::string> warnings;
  run.preps = PrepareAll(bundles, cfg, run.methods, grids, splits);
  FitAll(run, cfg, grids, /*dynamics=*/true, warnings);
  EvalReport r = BaseReport("in_distribution", run, cfg);
  AppendResults(r, run);
  r.warnings = std::move(warnings);
  return r;
}

EvalReport RunCrossMatrix(const std::vector<DatasetBundle>& bundles,
                          const ExperimentConfig& cfg,
                          const std::vector<SplitAssignment>* splits) {
  cfg.Validate();
  if (bundles.size() < 2) {
    throw ConfigError("cross-dataset evaluation needs at least two datasets");
  }
  const Grids grids = CrossGrids(cfg);
  Run run;
  run.methods = Deduplicated(cfg.methods);
  std::vector<std::string> warnings;
  run.preps = PrepareAll(bundles, cfg, run.methods, grids, splits);
  FitAll(run, cfg, grids, /*dynamics=*/true, warnings);
  EvalReport r = BaseReport("cross_matrix", run, cfg);
  AppendResults(r, run);
  for (std::size_t mi = 0; mi < run.methods.size(); ++mi) {
    r.matrices[std::string(MethodName(run.methods[mi]))] =
        CrossMatrixFor(run, mi, cfg, warnings);
  }
  const auto ld = r.matrices.find("logit_dynamics");
  if (ld != r.matrices.end()) {
    for (const auto& [name, m] : r.matrices) {
      if (name == "logit_dynamics") continue;
      r.differences[name] = Subtract(ld->second, m);
    }
  }
  r.warnings = std::move(warnings);
  return r;
}

EvalReport CompareDynamicsVariants(const std::vector<DatasetBundle>& bundles,
                                   const ExperimentConfig& cfg,
                                   bool dynamics_a, bool dynamics_b,
                                   const std::vector<SplitAssignment>* splits) {
  cfg.Validate();
  if (bundles.size() < 2) {
    throw ConfigError("ablation needs at least two datasets");
  }
  const Grids grids = CrossGrids(cfg);
  std::vector<std::string> warnings;
  Run run_a;
  run_a.methods = {Method::kLogitDynamics};
  run_a.preps = PrepareAll(bundles, cfg, run_a.methods, grids, splits);
  FitAll(run_a, cfg, grids, dynamics_a, warnings);
  Run run_b;
  run_b.methods = run_a.methods;
  run_b.preps = run_a.preps;
  FitAll(run_b, cfg, grids, dynamics_b, warnings);

  EvalReport r = BaseReport("ablation", run_a, cfg);
  AppendResults(r, run_a, dynamics_a ? "with_dynamics" : "without_dynamics");
  AppendResults(r, run_b, dynamics_b ? "with_dynamics" : "without_dynamics");
  r.deltas.clear();
  r.deltas_vs_topk.clear();
  AblationSummary a;
  a.with_dynamics = CrossMatrixFor(run_a, 0, cfg, warnings);
  a.without_dynamics = CrossMatrixFor(run_b, 0, cfg, warnings);
  a.difference = Subtract(a.with_dynamics, a.without_dynamics);
  a.mean_diagonal = a.difference.MeanDiagonal();
  a.mean_off_diagonal = a.difference.MeanOffDiagonal();
  r.ablation = std::move(a);
  r.warnings = std::move(warnings);
  return r;
}

EvalReport RunAblation(const std::vector<DatasetBundle>& bundles,
                       const ExperimentConfig& cfg,
                       const std::vector<SplitAssignment>* splits) {
  return CompareDynamicsVariants(bundles, cfg, true, false, splits);
}

}  // namespace logitdyn
