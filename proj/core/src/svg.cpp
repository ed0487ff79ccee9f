#include "mstop/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "mstop/csvio.hpp"
#include "mstop/errors.hpp"

namespace mstop {

namespace {

struct Bounds {
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();

  void include(double x, double y) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
};

double transform(double v, bool log_axis) {
  return log_axis ? std::log10(v) : v;
}

std::string tick_label(double v, bool log_axis) {
  return format_double(log_axis ? std::pow(10.0, v) : v);
}

}  // namespace

void write_line_plot(const std::filesystem::path& path, const SvgPlotOptions& opt,
                     const std::vector<SvgSeries>& series,
                     const std::vector<SvgBand>& bands) {
  constexpr double kMarginLeft = 70, kMarginRight = 20, kMarginTop = 40,
                   kMarginBottom = 55;

  Bounds b;
  auto include_points = [&](const std::vector<std::pair<double, double>>& pts) {
    for (const auto& [x, y] : pts) {
      if (opt.log_x && x <= 0.0) throw ConfigError("log x-axis needs positive values");
      if (opt.log_y && y <= 0.0) throw ConfigError("log y-axis needs positive values");
      b.include(transform(x, opt.log_x), transform(y, opt.log_y));
    }
  };
  for (const auto& s : series) include_points(s.points);
  for (const auto& band : bands) {
    include_points(band.lo);
    include_points(band.hi);
  }
  if (!(b.x_min <= b.x_max)) throw ConfigError("plot has no points");
  if (b.x_min == b.x_max) {
    b.x_min -= 0.5;
    b.x_max += 0.5;
  }
  if (b.y_min == b.y_max) {
    b.y_min -= 0.5;
    b.y_max += 0.5;
  }
  const double pad_y = 0.05 * (b.y_max - b.y_min);
  b.y_min -= pad_y;
  b.y_max += pad_y;

  const double plot_w = opt.width - kMarginLeft - kMarginRight;
  const double plot_h = opt.height - kMarginTop - kMarginBottom;
  auto px = [&](double x) {
    return kMarginLeft + plot_w * (transform(x, opt.log_x) - b.x_min) / (b.x_max - b.x_min);
  };
  auto py = [&](double y) {
    return kMarginTop + plot_h * (1.0 - (transform(y, opt.log_y) - b.y_min) / (b.y_max - b.y_min));
  };

  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
     << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width << " "
     << opt.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << opt.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
     << "font-family=\"sans-serif\" font-size=\"16\">" << opt.title << "</text>\n";

  // Axes with 5 ticks per side.
  os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = b.x_min + (b.x_max - b.x_min) * t / 4.0;
    const double sx = kMarginLeft + plot_w * t / 4.0;
    os << "<line x1=\"" << sx << "\" y1=\"" << kMarginTop << "\" x2=\"" << sx
       << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << sx << "\" y=\"" << kMarginTop + plot_h + 18
       << "\" text-anchor=\"middle\">" << tick_label(fx, opt.log_x) << "</text>\n";
    const double fy = b.y_min + (b.y_max - b.y_min) * t / 4.0;
    const double sy = kMarginTop + plot_h * (1.0 - t / 4.0);
    os << "<line x1=\"" << kMarginLeft << "\" y1=\"" << sy << "\" x2=\""
       << kMarginLeft + plot_w << "\" y2=\"" << sy << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << sy + 4
       << "\" text-anchor=\"end\">" << tick_label(fy, opt.log_y) << "</text>\n";
  }
  os << "</g>\n";
  os << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\""
     << plot_w << "\" height=\"" << plot_h
     << "\" fill=\"none\" stroke=\"#333\"/>\n";
  os << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << opt.height - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
     << opt.x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
     << "transform=\"rotate(-90 16 " << kMarginTop + plot_h / 2 << ")\">"
     << opt.y_label << "</text>\n";

  for (const auto& band : bands) {
    if (band.lo.empty() || band.lo.size() != band.hi.size()) continue;
    os << "<polygon fill=\"" << band.color << "\" opacity=\"0.2\" points=\"";
    for (const auto& [x, y] : band.lo) os << px(x) << ',' << py(y) << ' ';
    for (auto it = band.hi.rbegin(); it != band.hi.rend(); ++it) {
      os << px(it->first) << ',' << py(it->second) << ' ';
    }
    os << "\"/>\n";
  }

  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\"";
    if (s.dashed) os << " stroke-dasharray=\"6 4\"";
    os << " points=\"";
    for (const auto& [x, y] : s.points) os << px(x) << ',' << py(y) << ' ';
    os << "\"/>\n";
  }

  // Legend.
  double ly = kMarginTop + 14;
  for (const auto& s : series) {
    os << "<line x1=\"" << kMarginLeft + 10 << "\" y1=\"" << ly - 4 << "\" x2=\""
       << kMarginLeft + 34 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color
       << "\" stroke-width=\"1.8\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
       << "/>\n";
    os << "<text x=\"" << kMarginLeft + 40 << "\" y=\"" << ly
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    ly += 16;
  }
  os << "</svg>\n";
  if (!os) throw ConfigError("write failed for " + path.string());
}

}  // namespace mstop
