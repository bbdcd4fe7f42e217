#pragma once

// Self-contained SVG line chart for regret curves.  Output is a pure
// function of the input series: fixed canvas, fixed palette, legend in
// input order, numbers formatted with fixed precision.

#include "l1bandit/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace l1bandit {

struct ChartSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  ///< (t, value)
};

struct ChartOptions {
  int width = 800;
  int height = 500;
  std::string x_label = "t";
  std::string y_label = "cumulative regret";
  std::string title;
};

namespace detail {

inline std::string fmt_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string fmt_tick(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// A "nice" step size (1, 2 or 5 times a power of ten) for about n ticks.
inline double nice_step(double span, int n) {
  if (span <= 0.0) return 1.0;
  const double raw = span / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step;
  if (norm <= 1.0)
    step = 1.0;
  else if (norm <= 2.0)
    step = 2.0;
  else if (norm <= 5.0)
    step = 5.0;
  else
    step = 10.0;
  return step * mag;
}

inline const char* palette(int i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

}  // namespace detail

/// Renders the chart; throws ValidationError on empty input.
inline std::string render_chart_svg(const std::vector<ChartSeries>& series,
                                    const ChartOptions& opt = {}) {
  if (series.empty()) throw ValidationError("render_chart_svg: no series");
  for (const ChartSeries& s : series)
    if (s.points.empty())
      throw ValidationError("render_chart_svg: series '" + s.label +
                            "' has no points");

  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = 0.0, y_max = -std::numeric_limits<double>::infinity();
  for (const ChartSeries& s : series)
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;

  const double ml = 70.0, mr = 20.0, mt = opt.title.empty() ? 20.0 : 40.0,
               mb = 45.0;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  auto sx = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - y_min) / (y_max - y_min) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width
      << "\" height=\"" << opt.height << "\" viewBox=\"0 0 " << opt.width << ' '
      << opt.height << "\">\n";
  svg << "<rect width=\"" << opt.width << "\" height=\"" << opt.height
      << "\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    svg << "<text x=\"" << opt.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << opt.title
        << "</text>\n";

  // axes
  svg << "<line x1=\"" << detail::fmt_coord(ml) << "\" y1=\""
      << detail::fmt_coord(mt + ph) << "\" x2=\"" << detail::fmt_coord(ml + pw)
      << "\" y2=\"" << detail::fmt_coord(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg << "<line x1=\"" << detail::fmt_coord(ml) << "\" y1=\""
      << detail::fmt_coord(mt) << "\" x2=\"" << detail::fmt_coord(ml)
      << "\" y2=\"" << detail::fmt_coord(mt + ph)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  const double xs = detail::nice_step(x_max - x_min, 6);
  for (double x = std::ceil(x_min / xs) * xs; x <= x_max + 1e-9 * xs; x += xs) {
    svg << "<line x1=\"" << detail::fmt_coord(sx(x)) << "\" y1=\""
        << detail::fmt_coord(mt + ph) << "\" x2=\"" << detail::fmt_coord(sx(x))
        << "\" y2=\"" << detail::fmt_coord(mt + ph + 5)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << detail::fmt_coord(sx(x)) << "\" y=\""
        << detail::fmt_coord(mt + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << detail::fmt_tick(x) << "</text>\n";
  }
  const double ys = detail::nice_step(y_max - y_min, 6);
  for (double y = std::ceil(y_min / ys) * ys; y <= y_max + 1e-9 * ys; y += ys) {
    svg << "<line x1=\"" << detail::fmt_coord(ml - 5) << "\" y1=\""
        << detail::fmt_coord(sy(y)) << "\" x2=\"" << detail::fmt_coord(ml)
        << "\" y2=\"" << detail::fmt_coord(sy(y))
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << detail::fmt_coord(ml - 8) << "\" y=\""
        << detail::fmt_coord(sy(y) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::fmt_tick(y) << "</text>\n";
  }

  // axis labels
  svg << "<text x=\"" << detail::fmt_coord(ml + pw / 2) << "\" y=\""
      << detail::fmt_coord(mt + ph + 36)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">"
      << opt.x_label << "</text>\n";
  svg << "<text x=\"18\" y=\"" << detail::fmt_coord(mt + ph / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << detail::fmt_coord(mt + ph / 2)
      << ")\">" << opt.y_label << "</text>\n";

  // series
  for (std::size_t i = 0; i < series.size(); ++i) {
    svg << "<polyline fill=\"none\" stroke=\"" << detail::palette(static_cast<int>(i))
        << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : series[i].points) {
      if (!first) svg << ' ';
      svg << detail::fmt_coord(sx(x)) << ',' << detail::fmt_coord(sy(y));
      first = false;
    }
    svg << "\"/>\n";
  }

  // legend, input order
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = mt + 14.0 + 16.0 * static_cast<double>(i);
    svg << "<line x1=\"" << detail::fmt_coord(ml + 10) << "\" y1=\""
        << detail::fmt_coord(ly - 4) << "\" x2=\"" << detail::fmt_coord(ml + 30)
        << "\" y2=\"" << detail::fmt_coord(ly - 4) << "\" stroke=\""
        << detail::palette(static_cast<int>(i)) << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << detail::fmt_coord(ml + 36) << "\" y=\""
        << detail::fmt_coord(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[i].label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace l1bandit
