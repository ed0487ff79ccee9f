#pragma once

// Self-contained SVG line plots; CSV files are the canonical artifacts, the
// plots are a convenience for eyeballing results.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mstop {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f77b4";
  bool dashed = false;
};

// Shaded vertical band between lo and hi (e.g. mean +- std).
struct SvgBand {
  std::vector<std::pair<double, double>> lo;
  std::vector<std::pair<double, double>> hi;
  std::string color = "#1f77b4";
};

struct SvgPlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 480;
};

void write_line_plot(const std::filesystem::path& path, const SvgPlotOptions& options,
                     const std::vector<SvgSeries>& series,
                     const std::vector<SvgBand>& bands = {});

}  // namespace mstop
