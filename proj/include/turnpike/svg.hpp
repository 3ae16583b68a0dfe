#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace turnpike::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string fmt(double v, const char* spec = "%.2f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

// Line plot with a log10 y axis; values at or below `floor` are drawn at the floor.
inline std::string log_plot(const std::string& title, const std::vector<Series>& series,
                            double floor = 1e-12) {
  constexpr double W = 720, H = 440, left = 70, right = 170, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  double x0 = 0, x1 = 1, lo = std::log10(floor), hi = lo + 1;
  bool first = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double ly = std::log10(std::max(s.y[i], floor));
      if (first) {
        x0 = x1 = s.x[i];
        lo = hi = ly;
        first = false;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      lo = std::min(lo, ly);
      hi = std::max(hi, ly);
    }
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1);
  if (x1 <= x0) x1 = x0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) {
    return top + (hi - std::log10(std::max(y, floor))) / (hi - lo) * ph;
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int decades = static_cast<int>(hi - lo);
  const int every = std::max(1, decades / 8);
  for (int d = 0; d <= decades; d += every) {
    const double y = top + d * ph / (hi - lo);
    o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << y << "\" y2=\"" << y
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e"
      << static_cast<int>(hi) - d << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double x = x0 + k * (x1 - x0) / 5;
    o << "<text x=\"" << px(x) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
      << detail::fmt(x, "%g") << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">t</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 5];
    // Thin long curves so the file stays small.
    const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 2000);
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); i += stride)
      o << detail::fmt(px(s.x[i])) << ',' << detail::fmt(py(s.y[i])) << ' ';
    if (!s.x.empty() && (s.x.size() - 1) % stride != 0)
      o << detail::fmt(px(s.x.back())) << ',' << detail::fmt(py(s.y.back()));
    o << "\"/>\n";
    const double ly = top + 16 + 18 * static_cast<double>(k);
    o << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 36 << "\" y1=\"" << ly
      << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << s.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace turnpike::svg
