#include "cli.h"

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "logitdyn/baselines.h"
#include "logitdyn/dataset.h"
#include "logitdyn/errors.h"
#include "logitdyn/experiments.h"
#include "logitdyn/features.h"
#include "logitdyn/heads.h"
#include "logitdyn/metrics.h"
#include "logitdyn/probe.h"
#include "logitdyn/report.h"
#include "logitdyn/splits.h"
#include "logitdyn/synthetic.h"

namespace logitdyn::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
  bool json = false;
  std::size_t jobs = 1;
};

// Progress text is suppressed by --quiet and by --json (stdout then carries
// exactly one JSON document).
class Printer {
 public:
  Printer(const Globals& g, std::ostream& out) : g_(g), out_(out) {}
  template <typename... Args>
  void Line(const Args&... args) {
    if (g_.quiet || g_.json) return;
    (out_ << ... << args) << '\n';
  }
  void Result(const json& j) {
    if (g_.json) out_ << j.dump(2) << '\n';
  }

 private:
  const Globals& g_;
  std::ostream& out_;
};

std::size_t JobsFromEnv() {
  const char* env = std::getenv("LOGITDYN_JOBS");
  if (env == nullptr || *env == '\0') return 1;
  std::size_t v = 0;
  const char* end = env + std::char_traits<char>::length(env);
  auto [ptr, ec] = std::from_chars(env, end, v);
  if (ec != std::errc() || ptr != end || v == 0) {
    throw ConfigError("LOGITDYN_JOBS must be a positive integer, got '" +
                      std::string(env) + "'");
  }
  return v;
}

fs::path RequireOut(const Globals& g, const char* what) {
  if (g.out.empty()) throw ConfigError(std::string("--out ") + what + " is required");
  return g.out;
}

std::vector<Method> ParseMethods(const std::vector<std::string>& names) {
  std::vector<Method> out;
  for (const auto& n : names) {
    if (n == "all") return AllMethods();
    const auto m = ParseMethod(n);
    if (!m) throw ConfigError("unknown method '" + n + "'");
    out.push_back(*m);
  }
  return out;
}

json SplitBalance(const SplitAssignment& s, std::span<const std::uint8_t> e) {
  json j = json::object();
  const std::pair<const char*, const std::vector<std::size_t>*> parts[] = {
      {"head_train", &s.head_train},
      {"probe_train", &s.probe_train},
      {"probe_val", &s.probe_val},
      {"test", &s.test}};
  for (const auto& [name, rows] : parts) {
    std::size_t pos = 0;
    for (std::size_t r : *rows) pos += e[r];
    j[name] = {{"n", rows->size()}, {"errors", pos}};
  }
  return j;
}

// ---- synth -----------------------------------------------------------------

struct SynthOptions {
  SyntheticConfig traj;
  SyntheticHiddenConfig hidden;
  bool make_hidden = false;
  std::string id;
};

void AddSynth(CLI::App& app, SynthOptions& o) {
  app.add_option("--n", o.traj.n_examples, "number of examples")
      ->check(CLI::PositiveNumber);
  app.add_option("--classes", o.traj.n_classes, "number of classes")
      ->check(CLI::PositiveNumber);
  app.add_option("--depth", o.traj.depth, "trajectory depth D")
      ->check(CLI::PositiveNumber);
  app.add_option("--error-rate", o.traj.error_rate, "fraction of errors")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--commit-correct", o.traj.commit_depth_correct.lo,
                 "earliest commit depth of correct examples");
  app.add_option("--commit-correct-max", o.traj.commit_depth_correct.hi,
                 "latest commit depth of correct examples");
  app.add_option("--commit-error", o.traj.commit_depth_error.lo,
                 "earliest commit depth of error examples");
  app.add_option("--commit-error-max", o.traj.commit_depth_error.hi,
                 "latest commit depth of error examples");
  app.add_option("--volatility-error", o.traj.volatility_error);
  app.add_option("--volatility-correct", o.traj.volatility_correct);
  app.add_option("--boost", o.traj.boost, "top-1 margin");
  app.add_option("--noise", o.traj.noise, "logit noise std");
  app.add_option("--logit-scale", o.traj.logit_scale, "global logit scale");
  app.add_option("--id", o.id, "dataset id written to the manifest");
  app.add_flag("--hidden", o.make_hidden,
               "write an LHID hidden-state file instead of trajectories");
  app.add_option("--layers", o.hidden.layers, "LHID layer count");
  app.add_option("--hidden-dim", o.hidden.hidden_dim, "LHID hidden size");
  app.add_option("--separation", o.hidden.separation);
  app.add_option("--classifier-noise", o.hidden.classifier_noise);
}

int RunSynth(SynthOptions& o, const Globals& g, Printer& p) {
  const fs::path out = RequireOut(g, "<file>");
  json summary;
  if (o.make_hidden) {
    SyntheticHiddenConfig& c = o.hidden;
    c.n_examples = o.traj.n_examples;
    c.n_classes = o.traj.n_classes;
    c.seed = g.seed;
    if (!o.id.empty()) c.dataset_id = o.id;
    c.Validate();
    const HiddenStateDataset hs = GenerateSyntheticHidden(c);
    WriteHiddenStates(hs, out, {{"generator", c.ToJson()}});
    std::size_t errors = 0;
    for (std::uint8_t e : hs.errors()) errors += e;
    summary = {{"format", "LHID"}, {"path", out.string()}, {"n", hs.size()},
               {"errors", errors}};
  } else {
    SyntheticConfig& c = o.traj;
    c.seed = g.seed;
    if (!o.id.empty()) c.dataset_id = o.id;
    c.Validate();
    const TrajectoryDataset ds = GenerateSynthetic(c);
    WriteTrajectories(ds, out, {{"generator", c.ToJson()}});
    summary = {{"format", "LTRJ"},
               {"path", out.string()},
               {"n", ds.size()},
               {"misclassification_rate", MisclassificationRate(ds)}};
  }
  p.Line("wrote ", out.string(), " (", summary["n"].get<std::size_t>(),
         " examples)");
  p.Result(summary);
  return kOk;
}

// ---- train-heads / project ---------------------------------------------------

struct HeadOptions {
  std::string hidden;
  std::size_t last_l = 1;
  HeadTrainConfig cfg;
  double p_probe = 0.2;
  bool all_rows = false;
};

void AddTrainHeads(CLI::App& app, HeadOptions& o) {
  app.add_option("--hidden", o.hidden, "LHID file")
      ->required();
  app.add_option("--last-l", o.last_l, "train heads on the last L layers")
      ->check(CLI::PositiveNumber);
  app.add_option("--lr", o.cfg.learning_rate);
  app.add_option("--epochs", o.cfg.epochs);
  app.add_option("--batch", o.cfg.batch_size)->check(CLI::PositiveNumber);
  app.add_option("--weight-decay", o.cfg.weight_decay);
  app.add_option("--p-probe", o.p_probe, "probe-pool fraction of non-test data")
      ->check(CLI::Range(0.0, 1.0));
  app.add_flag("--all-rows", o.all_rows,
               "train on every example instead of the head-train split");
}

int RunTrainHeads(HeadOptions& o, const Globals& g, Printer& p) {
  const fs::path out = RequireOut(g, "<heads file>");
  o.cfg.seed = g.seed;
  o.cfg.Validate();
  const HiddenStateDataset hs = LoadHiddenStates(o.hidden);
  if (o.last_l > hs.layers()) {
    throw ConfigError("--last-l " + std::to_string(o.last_l) + " exceeds " +
                      std::to_string(hs.layers()) + " layers");
  }
  std::vector<std::size_t> rows;
  if (!o.all_rows) {
    rows = StratifiedSplit(hs.errors(), o.p_probe, g.seed).head_train;
  }
  const auto layers = SuffixLayers(hs.layers(), o.last_l);
  const auto heads = TrainLayerHeads(hs, layers, o.cfg, rows, g.jobs);
  WriteHeads(heads, out);
  json acc = json::array();
  for (const auto& h : heads) {
    const double a = HeadAccuracy(h, hs, rows);
    acc.push_back({{"layer", h.layer_index}, {"train_accuracy", a}});
    p.Line("layer ", h.layer_index, ": train accuracy ", a);
  }
  p.Line("wrote ", out.string());
  p.Result({{"path", out.string()},
            {"config", o.cfg.ToJson()},
            {"rows", rows.empty() ? hs.size() : rows.size()},
            {"heads", acc}});
  return kOk;
}

struct ProjectOptions {
  std::string hidden;
  std::string heads;
};

void AddProject(CLI::App& app, ProjectOptions& o) {
  app.add_option("--hidden", o.hidden, "LHID file")
      ->required();
  app.add_option("--heads", o.heads, "heads file from train-heads");
}

int RunProject(ProjectOptions& o, const Globals& g, Printer& p) {
  const fs::path out = RequireOut(g, "<trajectory file>");
  const HiddenStateDataset hs = LoadHiddenStates(o.hidden);
  std::vector<LayerHead> heads;
  if (!o.heads.empty()) heads = ReadHeads(o.heads);
  const TrajectoryDataset ds = ProjectToTrajectories(hs, heads, heads.size());
  WriteTrajectories(ds, out,
                    {{"source_hidden_states", o.hidden}, {"heads", o.heads}});
  p.Line("wrote ", out.string(), " (depth ", ds.depth(), ")");
  p.Result({{"path", out.string()}, {"n", ds.size()}, {"depth", ds.depth()}});
  return kOk;
}

// ---- features / train-probe ---------------------------------------------------

bool IsCsv(const fs::path& path) { return path.extension() == ".csv"; }

FeatureMatrix ReadFeatures(const fs::path& path) {
  return IsCsv(path) ? ReadFeaturesCsv(path) : ReadFeaturesBinary(path);
}

struct FeatureOptions {
  std::string data;
  FeatureConfig cfg;
  bool no_dynamics = false;
};

void AddFeatures(CLI::App& app, FeatureOptions& o) {
  app.add_option("--data", o.data, "LTRJ file")
      ->required();
  app.add_option("--last-l", o.cfg.last_l, "head layers before the classifier");
  app.add_option("--k", o.cfg.top_k, "top-K competitors")
      ->check(CLI::PositiveNumber);
  app.add_flag("--no-dynamics", o.no_dynamics, "omit the dynamics statistics");
}

int RunFeatures(FeatureOptions& o, const Globals& g, Printer& p) {
  const fs::path out = RequireOut(g, "<features file (.csv or .lfea)>");
  o.cfg.include_dynamics = !o.no_dynamics;
  const TrajectoryDataset ds = LoadTrajectories(o.data);
  o.cfg.ValidateFor(ds.classes(), ds.depth());
  const FeatureMatrix x = BuildFeatures(ds, o.cfg, g.jobs);
  if (IsCsv(out)) {
    WriteFeaturesCsv(x, out);
  } else {
    WriteFeaturesBinary(x, out);
  }
  p.Line("wrote ", out.string(), " (", x.rows(), " x ", x.cols(), ")");
  p.Result({{"path", out.string()}, {"rows", x.rows()}, {"cols", x.cols()},
            {"names", x.names()}});
  return kOk;
}

struct ProbeOptions {
  std::string features;
  ProbeHyperParams hp;
  double p_probe = 0.2;
  bool last_epoch = false;
};

void AddTrainProbe(CLI::App& app, ProbeOptions& o) {
  app.add_option("--features", o.features, "feature file (.csv or .lfea)")
      ->required();
  app.add_option("--lr", o.hp.learning_rate);
  app.add_option("--epochs", o.hp.epochs);
  app.add_option("--batch", o.hp.batch_size)->check(CLI::PositiveNumber);
  app.add_option("--weight-decay", o.hp.weight_decay);
  app.add_option("--p-probe", o.p_probe)->check(CLI::Range(0.0, 1.0));
  app.add_flag("--last-epoch", o.last_epoch,
               "keep the final epoch instead of the best probe-val epoch");
}

int RunTrainProbe(ProbeOptions& o, const Globals& g, Printer& p) {
  const fs::path out = RequireOut(g, "<model json>");
  o.hp.seed = g.seed;
  o.hp.select_best_epoch = !o.last_epoch;
  o.hp.Validate();
  const FeatureMatrix x = ReadFeatures(o.features);
  const SplitAssignment split = StratifiedSplit(x.labels(), o.p_probe, g.seed);
  const ProbeModel model = TrainProbe(x, split, o.hp);
  std::vector<std::uint8_t> test_labels;
  for (std::size_t r : split.test) test_labels.push_back(x.labels()[r]);
  const double test_ap =
      AveragePrecision(model.ScoreRows(x, split.test), test_labels).aucpr;
  const json doc = {{"probe", model.ToJson()},
                    {"split", split.ToJson()},
                    {"val_aucpr", model.val_aucpr ? json(*model.val_aucpr) : json()},
                    {"test_aucpr", test_ap}};
  std::ofstream f(out);
  if (!f) throw DataError("cannot write " + out.string());
  f << doc.dump(2) << '\n';
  p.Line("best epoch ", model.best_epoch, ", test AUCPR ", test_ap);
  p.Line("wrote ", out.string());
  p.Result({{"path", out.string()},
            {"best_epoch", model.best_epoch},
            {"val_aucpr", doc["val_aucpr"]},
            {"test_aucpr", test_ap}});
  return kOk;
}

// ---- eval / cross-eval / ablate -------------------------------------------

struct ExperimentOptions {
  std::string config;
  std::vector<std::string> data;
  std::vector<std::string> hidden;
  std::vector<std::string> names;
  std::vector<std::string> methods;
  std::vector<std::size_t> top_k;
  std::vector<std::size_t> last_l;
  std::vector<double> head_lr;
  std::vector<std::size_t> head_epochs;
  std::optional<double> p_probe;
  std::optional<std::size_t> probe_epochs;
  std::optional<double> probe_lr;
  std::optional<std::size_t> cross_k;
  std::optional<std::size_t> cross_last_l;
  std::optional<double> energy_temperature;
  std::string run_id;
};

void AddExperiment(CLI::App& app, ExperimentOptions& o, bool cross) {
  app.add_option("--config", o.config, "experiment config JSON");
  app.add_option("--data", o.data, "LTRJ file (repeatable)");
  app.add_option("--hidden", o.hidden, "LHID file (repeatable)");
  app.add_option("--name", o.names, "dataset name (repeatable)");
  app.add_option("--methods", o.methods, "comma-separated methods or 'all'")
      ->delimiter(',');
  app.add_option("--k", o.top_k, "top-K grid")->delimiter(',');
  app.add_option("--last-l", o.last_l, "last-L grid")->delimiter(',');
  app.add_option("--head-lr", o.head_lr, "head learning-rate grid")
      ->delimiter(',');
  app.add_option("--head-epochs", o.head_epochs, "head epoch grid")
      ->delimiter(',');
  app.add_option("--p-probe", o.p_probe)->check(CLI::Range(0.0, 1.0));
  app.add_option("--probe-epochs", o.probe_epochs);
  app.add_option("--probe-lr", o.probe_lr);
  app.add_option("--energy-temperature", o.energy_temperature);
  app.add_option("--run-id", o.run_id);
  if (cross) {
    app.add_option("--cross-k", o.cross_k, "fix K for every transfer cell");
    app.add_option("--cross-last-l", o.cross_last_l,
                   "fix L for every transfer cell");
  }
}

ExperimentConfig BuildConfig(const ExperimentOptions& o, const Globals& g,
                             const std::string& default_run_id) {
  ExperimentConfig cfg;
  if (!o.config.empty()) {
    cfg = ExperimentConfig::FromFile(o.config);
  } else {
    cfg.run_id = default_run_id;
  }
  const std::size_t n = std::max(o.data.size(), o.hidden.size());
  if (!o.data.empty() && !o.hidden.empty() && o.data.size() != o.hidden.size()) {
    throw ConfigError("--data and --hidden must be given the same number of "
                      "times");
  }
  if (!o.names.empty() && o.names.size() != n) {
    throw ConfigError("--name must be given once per dataset");
  }
  if (n > 0) {
    cfg.datasets.clear();
    for (std::size_t i = 0; i < n; ++i) {
      DatasetSpec d;
      if (!o.data.empty()) d.trajectories = o.data[i];
      if (!o.hidden.empty()) d.hidden_states = o.hidden[i];
      if (!o.names.empty()) d.name = o.names[i];
      cfg.datasets.push_back(std::move(d));
    }
  }
  if (cfg.datasets.empty()) {
    throw ConfigError("no datasets: pass --data/--hidden or --config");
  }
  if (o.p_probe) {
    for (auto& d : cfg.datasets) d.p_probe = *o.p_probe;
  }
  if (!o.methods.empty()) cfg.methods = ParseMethods(o.methods);
  if (!o.top_k.empty()) cfg.top_k_grid = o.top_k;
  if (!o.last_l.empty()) cfg.last_l_grid = o.last_l;
  if (!o.head_lr.empty()) cfg.head_lr_grid = o.head_lr;
  if (!o.head_epochs.empty()) cfg.head_epochs_grid = o.head_epochs;
  if (o.probe_epochs) cfg.probe.epochs = *o.probe_epochs;
  if (o.probe_lr) cfg.probe.learning_rate = *o.probe_lr;
  if (o.energy_temperature) cfg.energy_temperature = *o.energy_temperature;
  if (o.cross_k) cfg.cross_top_k = o.cross_k;
  if (o.cross_last_l) cfg.cross_last_l = o.cross_last_l;
  if (!o.run_id.empty()) cfg.run_id = o.run_id;
  if (!g.out.empty()) cfg.output_dir = g.out;
  cfg.seed = g.seed;
  cfg.probe.seed = g.seed;
  cfg.jobs = g.jobs;
  cfg.Validate();
  return cfg;
}

std::vector<DatasetBundle> LoadBundles(const ExperimentConfig& cfg) {
  std::vector<DatasetBundle> bundles;
  std::map<std::string, std::size_t> seen;
  for (const auto& spec : cfg.datasets) {
    DatasetBundle b = LoadBundle(spec);
    // Two files generated with the same id still need distinct names.
    const std::size_t count = seen[b.name]++;
    if (count > 0) b.name += "#" + std::to_string(count + 1);
    bundles.push_back(std::move(b));
  }
  return bundles;
}

enum class Protocol { kInDistribution, kCross, kAblation };

int RunExperiment(const ExperimentOptions& o, const Globals& g, Printer& p,
                  Protocol protocol) {
  const char* default_id = protocol == Protocol::kInDistribution ? "eval"
                           : protocol == Protocol::kCross        ? "cross-eval"
                                                                 : "ablate";
  const ExperimentConfig cfg = BuildConfig(o, g, default_id);
  const auto bundles = LoadBundles(cfg);
  EvalReport report;
  switch (protocol) {
    case Protocol::kInDistribution:
      report = RunInDistribution(bundles, cfg);
      break;
    case Protocol::kCross:
      report = RunCrossMatrix(bundles, cfg);
      break;
    case Protocol::kAblation:
      report = RunAblation(bundles, cfg);
      break;
  }
  const fs::path dir = cfg.output_dir / cfg.run_id;
  WriteReport(report, dir);
  for (const auto& r : report.results) {
    std::string test = r.test_aucpr ? std::to_string(*r.test_aucpr) : "n/a";
    p.Line(r.dataset, "  ", MethodName(r.method), "  test AUCPR ", test,
           r.note.empty() ? "" : "  (" + r.note + ")");
  }
  for (const auto& [name, d] : report.deltas) {
    p.Line(name, "  delta ", d.value ? std::to_string(*d.value) : "null",
           d.best_competitor ? " vs " + *d.best_competitor : "");
  }
  if (report.ablation) {
    const auto& a = *report.ablation;
    p.Line("ablation mean diagonal ",
           a.mean_diagonal ? std::to_string(*a.mean_diagonal) : "n/a",
           ", mean off-diagonal ",
           a.mean_off_diagonal ? std::to_string(*a.mean_off_diagonal) : "n/a");
  }
  p.Line("wrote ", (dir / "report.json").string());
  json summary = report.ToJson();
  summary["report_path"] = (dir / "report.json").string();
  p.Result(summary);
  return kOk;
}

// ---- baselines / inspect ------------------------------------------------------

struct BaselineOptions {
  std::string data;
  std::vector<std::string> methods{"max_logit", "entropy", "margin", "energy"};
  double temperature = 1.0;
};

void AddBaselines(CLI::App& app, BaselineOptions& o) {
  app.add_option("--data", o.data, "LTRJ file")
      ->required();
  app.add_option("--methods", o.methods, "scalar methods")->delimiter(',');
  app.add_option("--temperature", o.temperature, "energy temperature");
}

int RunBaselines(const BaselineOptions& o, const Globals& g, Printer& p) {
  const fs::path out = RequireOut(g, "<scores csv>");
  std::vector<Method> methods;
  for (const auto& name : o.methods) {
    const auto m = ParseMethod(name);
    if (!m || !IsScalarMethod(*m)) {
      throw ConfigError("baselines takes scalar methods only, got '" + name +
                        "'");
    }
    methods.push_back(*m);
  }
  if (!(o.temperature > 0.0)) throw ConfigError("--temperature must be > 0");
  const TrajectoryDataset ds = LoadTrajectories(o.data);
  std::vector<BaselineScore> rows;
  json summary = json::object();
  for (Method m : methods) {
    const auto scores = ScalarErrorScores(ds, m, o.temperature);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      rows.push_back({i, std::string(MethodName(m)), scores[i]});
    }
    std::optional<double> ap;
    const double rate = MisclassificationRate(ds);
    if (rate > 0.0 && rate < 1.0) ap = AveragePrecision(scores, ds.errors()).aucpr;
    summary[std::string(MethodName(m))] = ap ? json(*ap) : json();
    p.Line(MethodName(m), "  AUCPR (all examples) ",
           ap ? std::to_string(*ap) : "n/a");
  }
  WriteBaselineScoresCsv(rows, out);
  p.Line("wrote ", out.string());
  p.Result({{"path", out.string()}, {"aucpr_all_examples", summary}});
  return kOk;
}

struct InspectOptions {
  std::vector<std::string> files;
  double p_probe = 0.2;
};

void AddInspect(CLI::App& app, InspectOptions& o) {
  app.add_option("files", o.files, "LTRJ or LHID files")
      ->required();
  app.add_option("--p-probe", o.p_probe)->check(CLI::Range(0.0, 1.0));
}

int RunInspect(const InspectOptions& o, const Globals& g, Printer& p) {
  json all = json::array();
  for (const auto& file : o.files) {
    const FileHeader h = ReadHeader(file);
    json j = {{"path", file},
              {"format", h.format},
              {"n", h.n},
              {"classes", h.classes},
              {"file_bytes", h.file_bytes},
              {"expected_bytes", h.expected_bytes}};
    std::vector<std::uint8_t> errors;
    if (h.format == "LTRJ") {
      j["depth"] = h.depth;
      j["flags"] = h.flags;
      errors = LoadTrajectories(file).errors();
    } else {
      j["layers"] = h.layers;
      j["hidden_dim"] = h.hidden_dim;
      errors = LoadHiddenStates(file).errors();
    }
    std::size_t n_err = 0;
    for (std::uint8_t e : errors) n_err += e;
    j["errors"] = n_err;
    j["manifest"] = ReadManifest(file);
    p.Line(file, ": ", h.format, " N=", h.n, " C=", h.classes,
           h.format == "LTRJ" ? " D=" + std::to_string(h.depth)
                              : " T=" + std::to_string(h.layers) +
                                    " H=" + std::to_string(h.hidden_dim),
           " errors=", n_err);
    try {
      const SplitAssignment s = StratifiedSplit(errors, o.p_probe, g.seed);
      j["splits"] = SplitBalance(s, errors);
      for (const auto& [name, v] : j["splits"].items()) {
        p.Line("  ", name, ": n=", v["n"].get<std::size_t>(),
               " errors=", v["errors"].get<std::size_t>());
      }
    } catch (const DataError& e) {
      j["splits"] = nullptr;
      j["split_note"] = e.what();
      p.Line("  splits: ", e.what());
    }
    all.push_back(std::move(j));
  }
  p.Result(all.size() == 1 ? all[0] : all);
  return kOk;
}

}  // namespace

int Run(int argc, const char* const* argv, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Misclassification detection from depth-wise logit trajectories",
               "logitdyn"};
  app.require_subcommand(1);
  app.fallthrough();
  app.failure_message(CLI::FailureMessage::help);

  Globals g;
  try {
    g.jobs = JobsFromEnv();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  app.add_option("--seed", g.seed, "random seed for every stochastic step");
  app.add_option("--out", g.out, "output file or report directory");
  app.add_flag("--quiet", g.quiet, "suppress progress output");
  app.add_flag("--json", g.json, "print a JSON summary on stdout");
  app.add_option("--jobs", g.jobs, "worker threads (default $LOGITDYN_JOBS)")
      ->check(CLI::PositiveNumber);

  SynthOptions synth;
  HeadOptions heads;
  ProjectOptions project;
  FeatureOptions features;
  ProbeOptions probe;
  ExperimentOptions eval;
  ExperimentOptions cross;
  ExperimentOptions ablate;
  BaselineOptions baselines;
  InspectOptions inspect;

  auto* c_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  AddSynth(*c_synth, synth);
  auto* c_heads =
      app.add_subcommand("train-heads", "train per-layer linear heads");
  AddTrainHeads(*c_heads, heads);
  auto* c_project =
      app.add_subcommand("project", "hidden states + heads -> trajectories");
  AddProject(*c_project, project);
  auto* c_features =
      app.add_subcommand("features", "extract probe features from trajectories");
  AddFeatures(*c_features, features);
  auto* c_probe = app.add_subcommand("train-probe", "train the error probe");
  AddTrainProbe(*c_probe, probe);
  auto* c_eval = app.add_subcommand("eval", "in-distribution comparison");
  AddExperiment(*c_eval, eval, false);
  auto* c_cross =
      app.add_subcommand("cross-eval", "cross-dataset transfer matrix");
  AddExperiment(*c_cross, cross, true);
  auto* c_ablate = app.add_subcommand("ablate", "dynamics ablation matrices");
  AddExperiment(*c_ablate, ablate, true);
  auto* c_baselines =
      app.add_subcommand("baselines", "scalar confidence baselines");
  AddBaselines(*c_baselines, baselines);
  auto* c_inspect =
      app.add_subcommand("inspect", "print file headers and split balance");
  AddInspect(*c_inspect, inspect);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  Printer printer(g, out);
  try {
    if (*c_synth) return RunSynth(synth, g, printer);
    if (*c_heads) return RunTrainHeads(heads, g, printer);
    if (*c_project) return RunProject(project, g, printer);
    if (*c_features) return RunFeatures(features, g, printer);
    if (*c_probe) return RunTrainProbe(probe, g, printer);
    if (*c_eval) return RunExperiment(eval, g, printer, Protocol::kInDistribution);
    if (*c_cross) return RunExperiment(cross, g, printer, Protocol::kCross);
    if (*c_ablate) return RunExperiment(ablate, g, printer, Protocol::kAblation);
    if (*c_baselines) return RunBaselines(baselines, g, printer);
    if (*c_inspect) return RunInspect(inspect, g, printer);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace logitdyn::cli
