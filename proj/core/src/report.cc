#include "logitdyn/report.h"

#include <charconv>
#include <fstream>
#include <limits>

#include "logitdyn/errors.h"
#include "logitdyn/heatmap.h"

namespace logitdyn {
namespace {

nlohmann::json Optional(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json();
}

std::string CsvNumber(const std::optional<double>& v) {
  if (!v) return {};
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), *v);
  return std::string(buf, ptr);
}

std::optional<double> Mean(const LabeledMatrix& m, bool diagonal) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if ((i == j) != diagonal || !m.values[i][j]) continue;
      total += *m.values[i][j];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

}  // namespace

LabeledMatrix LabeledMatrix::Empty(std::vector<std::string> rows,
                                   std::vector<std::string> cols) {
  LabeledMatrix m;
  m.values.assign(rows.size(),
                  std::vector<std::optional<double>>(cols.size()));
  m.row_labels = std::move(rows);
  m.col_labels = std::move(cols);
  return m;
}

std::optional<double> LabeledMatrix::MeanDiagonal() const {
  return Mean(*this, true);
}

std::optional<double> LabeledMatrix::MeanOffDiagonal() const {
  return Mean(*this, false);
}

nlohmann::json LabeledMatrix::ToJson() const {
  nlohmann::json vals = nlohmann::json::array();
  for (const auto& row : values) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& v : row) r.push_back(Optional(v));
    vals.push_back(std::move(r));
  }
  return {{"rows", row_labels}, {"cols", col_labels}, {"values", vals}};
}

LabeledMatrix Subtract(const LabeledMatrix& a, const LabeledMatrix& b) {
  if (a.row_labels != b.row_labels || a.col_labels != b.col_labels) {
    throw DataError("cannot subtract matrices with different labels");
  }
  LabeledMatrix out = LabeledMatrix::Empty(a.row_labels, a.col_labels);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (a.values[i][j] && b.values[i][j]) {
        out.values[i][j] = *a.values[i][j] - *b.values[i][j];
      }
    }
  }
  return out;
}

DeltaEntry ComputeDelta(const std::map<std::string, double>& aucpr_by_method,
                        std::string_view target) {
  DeltaEntry out;
  const auto it = aucpr_by_method.find(std::string(target));
  if (it == aucpr_by_method.end()) return out;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [method, value] : aucpr_by_method) {
    if (method == target) continue;
    if (value > best) {
      best = value;
      out.best_competitor = method;
    }
  }
  if (out.best_competitor) out.value = it->second - best;
  return out;
}

const MethodResult* EvalReport::Find(Method m, std::string_view dataset) const {
  for (const auto& r : results) {
    if (r.method == m && r.dataset == dataset) return &r;
  }
  return nullptr;
}

nlohmann::json EvalReport::ToJson() const {
  nlohmann::json j;
  j["kind"] = kind;
  j["run_id"] = run_id;
  j["config"] = config;
  j["datasets"] = nlohmann::json::array();
  for (const auto& d : datasets) {
    j["datasets"].push_back({{"name", d.name},
                             {"n_examples", d.n_examples},
                             {"n_classes", d.n_classes},
                             {"misclassification_rate",
                              d.misclassification_rate},
                             {"split", d.split}});
  }
  j["results"] = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json row = {{"method", MethodName(r.method)},
                          {"dataset", r.dataset},
                          {"val_aucpr", Optional(r.val_aucpr)},
                          {"test_aucpr", Optional(r.test_aucpr)},
                          {"hyperparameters", r.hyperparameters}};
    if (!r.note.empty()) row["note"] = r.note;
    if (!r.variant.empty()) row["variant"] = r.variant;
    j["results"].push_back(std::move(row));
  }
  auto delta_json = [](const std::map<std::string, DeltaEntry>& deltas) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [dataset, d] : deltas) {
      out[dataset] = {{"value", Optional(d.value)},
                      {"best_competitor",
                       d.best_competitor ? nlohmann::json(*d.best_competitor)
                                         : nlohmann::json()}};
    }
    return out;
  };
  j["delta"] = delta_json(deltas);
  j["delta_vs_topk_logits"] = delta_json(deltas_vs_topk);
  j["matrices"] = nlohmann::json::object();
  for (const auto& [name, m] : matrices) j["matrices"][name] = m.ToJson();
  j["difference_vs_logit_dynamics"] = nlohmann::json::object();
  for (const auto& [name, m] : differences) {
    j["difference_vs_logit_dynamics"][name] = m.ToJson();
  }
  if (ablation) {
    j["ablation"] = {{"with_dynamics", ablation->with_dynamics.ToJson()},
                     {"without_dynamics", ablation->without_dynamics.ToJson()},
                     {"difference", ablation->difference.ToJson()},
                     {"mean_diagonal", Optional(ablation->mean_diagonal)},
                     {"mean_off_diagonal",
                      Optional(ablation->mean_off_diagonal)}};
  } else {
    j["ablation"] = nullptr;
  }
  j["warnings"] = warnings;
  j["generated_at"] = generated_at;
  return j;
}

void WriteReport(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  {
    std::ofstream out(dir / "report.json", std::ios::trunc);
    if (!out) throw DataError("cannot write report.json in " + dir.string());
    out << report.ToJson().dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "results.csv", std::ios::trunc);
    if (!out) throw DataError("cannot write results.csv in " + dir.string());
    out << "method,variant,dataset,val_aucpr,test_aucpr\n";
    for (const auto& r : report.results) {
      out << MethodName(r.method) << ',' << r.variant << ',' << r.dataset
          << ',' << CsvNumber(r.val_aucpr) << ',' << CsvNumber(r.test_aucpr)
          << '\n';
    }
  }
  for (const auto& [name, m] : report.matrices) {
    EmitHeatmap(m, dir / ("aucpr_" + name + ".svg"),
                "Cross-dataset AUCPR: " + name);
  }
  for (const auto& [name, m] : report.differences) {
    EmitHeatmap(m, dir / ("diff_logit_dynamics_minus_" + name + ".svg"),
                "AUCPR difference: logit_dynamics - " + name);
  }
  if (report.ablation) {
    EmitHeatmap(report.ablation->with_dynamics,
                dir / "ablation_with_dynamics.svg", "AUCPR with dynamics");
    EmitHeatmap(report.ablation->without_dynamics,
                dir / "ablation_without_dynamics.svg",
                "AUCPR without dynamics");
    EmitHeatmap(report.ablation->difference, dir / "ablation_difference.svg",
                "AUCPR(with dynamics) - AUCPR(without dynamics)");
  }
}

}  // namespace logitdyn
