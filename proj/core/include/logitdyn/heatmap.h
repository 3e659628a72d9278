#ifndef LOGITDYN_HEATMAP_H_
#define LOGITDYN_HEATMAP_H_

#include <filesystem>
#include <string>

#include "logitdyn/report.h"

namespace logitdyn {

// Standalone SVG with one annotated cell per entry and a diverging
// blue-white-red scale centered at 0 (symmetric in max |value|). A CSV twin
// with the same stem is always written next to it.
void EmitHeatmap(const LabeledMatrix& m, const std::filesystem::path& svg_path,
                 const std::string& title = {});

// CSV layout: "train\test,<col labels...>" header, then one row per row
// label; empty cells are missing values.
void WriteMatrixCsv(const LabeledMatrix& m, const std::filesystem::path& path);
LabeledMatrix ReadMatrixCsv(const std::filesystem::path& path);

// "#rrggbb" for value v on the diverging scale with half-range `limit`.
std::string DivergingColor(double v, double limit);

}  // namespace logitdyn

#endif  // LOGITDYN_HEATMAP_H_
