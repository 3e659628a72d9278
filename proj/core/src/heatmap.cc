#include "logitdyn/heatmap.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "logitdyn/errors.h"

namespace logitdyn {
namespace {

std::string Shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string XmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> SplitComma(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

std::string DivergingColor(double v, double limit) {
  double t = limit > 0.0 ? std::clamp(v / limit, -1.0, 1.0) : 0.0;
  // Endpoints: blue (33,102,172) for negative, red (178,24,43) for positive.
  const double white = 255.0;
  double r, g, b;
  if (t >= 0) {
    r = white + (178 - white) * t;
    g = white + (24 - white) * t;
    b = white + (43 - white) * t;
  } else {
    t = -t;
    r = white + (33 - white) * t;
    g = white + (102 - white) * t;
    b = white + (172 - white) * t;
  }
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(r)),
                static_cast<int>(std::lround(g)),
                static_cast<int>(std::lround(b)));
  return buf;
}

void WriteMatrixCsv(const LabeledMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "train\\test";
  for (const auto& c : m.col_labels) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out << m.row_labels[i];
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out << ',';
      if (m.values[i][j]) out << Shortest(*m.values[i][j]);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

LabeledMatrix ReadMatrixCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty");
  auto header = SplitComma(line);
  if (header.empty()) throw DataError(path.string() + ": bad header");
  LabeledMatrix m;
  m.col_labels.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = SplitComma(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ": ragged matrix row");
    }
    m.row_labels.push_back(cells[0]);
    std::vector<std::optional<double>> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      if (cells[j].empty()) {
        row.emplace_back();
        continue;
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cells[j].data(),
                                       cells[j].data() + cells[j].size(), v);
      if (ec != std::errc() || ptr != cells[j].data() + cells[j].size()) {
        throw DataError(path.string() + ": bad cell '" + cells[j] + "'");
      }
      row.emplace_back(v);
    }
    m.values.push_back(std::move(row));
  }
  return m;
}

void EmitHeatmap(const LabeledMatrix& m, const std::filesystem::path& svg_path,
                 const std::string& title) {
  if (m.values.size() != m.rows()) throw DataError("matrix is not rectangular");
  for (const auto& row : m.values) {
    if (row.size() != m.cols()) throw DataError("matrix is not rectangular");
  }
  double limit = 0.0;
  for (const auto& row : m.values) {
    for (const auto& v : row) {
      if (v) limit = std::max(limit, std::abs(*v));
    }
  }

  constexpr int kCell = 90;
  constexpr int kLeft = 140;
  constexpr int kTop = 70;
  const int width = kLeft + kCell * static_cast<int>(m.cols()) + 20;
  const int height = kTop + kCell * static_cast<int>(m.rows()) + 40;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-size=\"15\">" << XmlEscape(title) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + kCell * static_cast<int>(m.cols()) / 2
      << "\" y=\"" << kTop - 28 << "\" text-anchor=\"middle\" font-size=\"11\">"
      << "test dataset</text>\n";
  svg << "<text x=\"12\" y=\"" << kTop + kCell * static_cast<int>(m.rows()) / 2
      << "\" font-size=\"11\">train</text>\n";
  for (std::size_t j = 0; j < m.cols(); ++j) {
    svg << "<text x=\"" << kLeft + kCell * static_cast<int>(j) + kCell / 2
        << "\" y=\"" << kTop - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
        << XmlEscape(m.col_labels[j]) << "</text>\n";
  }
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const int y = kTop + kCell * static_cast<int>(i);
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + kCell / 2 + 4
        << "\" text-anchor=\"end\" font-size=\"12\">"
        << XmlEscape(m.row_labels[i]) << "</text>\n";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const int x = kLeft + kCell * static_cast<int>(j);
      const auto& v = m.values[i][j];
      const std::string fill = v ? DivergingColor(*v, limit) : "#d9d9d9";
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell
          << "\" height=\"" << kCell << "\" fill=\"" << fill
          << "\" stroke=\"#ffffff\"/>\n";
      char label[32];
      if (v) {
        std::snprintf(label, sizeof(label), "%+.4f", *v);
      } else {
        std::snprintf(label, sizeof(label), "n/a");
      }
      svg << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 4
          << "\" text-anchor=\"middle\" font-size=\"13\">" << label
          << "</text>\n";
    }
  }
  svg << "</svg>\n";

  std::ofstream out(svg_path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + svg_path.string() + " for writing");
  out << svg.str();
  if (!out) throw DataError("write failed for " + svg_path.string());
  auto csv_path = svg_path;
  csv_path.replace_extension(".csv");
  WriteMatrixCsv(m, csv_path);
}

}  // namespace logitdyn
