#pragma once

// Minimal self-contained SVG line charts: mean curves with a shaded +-1 std
// band per series and optional dashed horizontal reference lines.

#include "blm/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace blm {

struct BandSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> std;
};

struct ReferenceLine {
  std::string label;
  double y;
};

struct ChartSpec {
  std::string title;
  std::string x_label = "iteration";
  std::string y_label;
  std::vector<BandSeries> series;
  std::vector<ReferenceLine> references;
  int width = 640;
  int height = 420;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, std::round(v * 100.0) / 100.0,
                           std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

inline std::string tick_label(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 3);
  return std::string(buf, res.ptr);
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

}  // namespace detail

inline void write_svg(std::ostream& os, const ChartSpec& chart) {
  const double left = 70, right = 150, top = 40, bottom = 50;
  const double pw = chart.width - left - right;
  const double ph = chart.height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.mean[i])) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.mean[i] - s.std[i]);
      ymax = std::max(ymax, s.mean[i] + s.std[i]);
    }
  }
  for (const auto& r : chart.references) {
    if (!std::isfinite(r.y)) continue;
    ymin = std::min(ymin, r.y);
    ymax = std::max(ymax, r.y);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto sx = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };
  using detail::fmt;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << chart.width << "\" height=\""
     << chart.height << "\" viewBox=\"0 0 " << chart.width << ' ' << chart.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
     << "font-family=\"sans-serif\">" << detail::xml_escape(chart.title) << "</text>\n";

  // axes and ticks
  os << "<g stroke=\"#333\" stroke-width=\"1\" fill=\"none\">\n";
  os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + ph) << "\" x2=\"" << fmt(left + pw)
     << "\" y2=\"" << fmt(top + ph) << "\"/>\n";
  os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top) << "\" x2=\"" << fmt(left)
     << "\" y2=\"" << fmt(top + ph) << "\"/>\n";
  os << "</g>\n<g font-size=\"11\" font-family=\"sans-serif\" fill=\"#333\">\n";
  for (int k = 0; k <= 5; ++k) {
    const double xv = xmin + (xmax - xmin) * k / 5.0;
    const double yv = ymin + (ymax - ymin) * k / 5.0;
    os << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(top + ph + 16)
       << "\" text-anchor=\"middle\">" << detail::tick_label(xv) << "</text>\n";
    os << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(sy(yv) + 4)
       << "\" text-anchor=\"end\">" << detail::tick_label(yv) << "</text>\n";
  }
  os << "<text x=\"" << fmt(left + pw / 2) << "\" y=\"" << fmt(chart.height - 10.0)
     << "\" text-anchor=\"middle\" font-size=\"13\">" << detail::xml_escape(chart.x_label)
     << "</text>\n";
  os << "<text transform=\"translate(16 " << fmt(top + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"13\">"
     << detail::xml_escape(chart.y_label) << "</text>\n</g>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = detail::palette(k);
    std::string upper, lower, line;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.mean[i])) continue;
      upper += fmt(sx(s.x[i])) + "," + fmt(sy(s.mean[i] + s.std[i])) + " ";
      line += fmt(sx(s.x[i])) + "," + fmt(sy(s.mean[i])) + " ";
    }
    for (std::size_t i = s.x.size(); i-- > 0;) {
      if (!std::isfinite(s.mean[i])) continue;
      lower += fmt(sx(s.x[i])) + "," + fmt(sy(s.mean[i] - s.std[i])) + " ";
    }
    os << "<polygon class=\"band\" points=\"" << upper << lower << "\" fill=\"" << color
       << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    os << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.8\"/>\n";
  }
  for (std::size_t k = 0; k < chart.references.size(); ++k) {
    const auto& r = chart.references[k];
    if (!std::isfinite(r.y)) continue;
    os << "<line class=\"reference\" x1=\"" << fmt(left) << "\" y1=\"" << fmt(sy(r.y)) << "\" x2=\""
       << fmt(left + pw) << "\" y2=\"" << fmt(sy(r.y)) << "\" stroke=\"#555\" "
       << "stroke-dasharray=\"6 4\" stroke-width=\"1.2\"/>\n";
  }

  // legend
  double ly = top + 10;
  os << "<g font-size=\"12\" font-family=\"sans-serif\">\n";
  for (std::size_t k = 0; k < chart.series.size(); ++k, ly += 20) {
    os << "<rect x=\"" << fmt(left + pw + 12) << "\" y=\"" << fmt(ly - 9) << "\" width=\"14\" "
       << "height=\"10\" fill=\"" << detail::palette(k) << "\" fill-opacity=\"0.6\"/>\n";
    os << "<text x=\"" << fmt(left + pw + 32) << "\" y=\"" << fmt(ly) << "\">"
       << detail::xml_escape(chart.series[k].label) << "</text>\n";
  }
  for (const auto& r : chart.references) {
    if (!std::isfinite(r.y)) continue;
    os << "<line x1=\"" << fmt(left + pw + 12) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
       << fmt(left + pw + 26) << "\" y2=\"" << fmt(ly - 4)
       << "\" stroke=\"#555\" stroke-dasharray=\"4 2\"/>\n";
    os << "<text x=\"" << fmt(left + pw + 32) << "\" y=\"" << fmt(ly) << "\">"
       << detail::xml_escape(r.label) << "</text>\n";
    ly += 20;
  }
  os << "</g>\n</svg>\n";
}

}  // namespace blm
