#include "actland/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <vector>

namespace actland::svg {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Multiples of a 1/2/5 step inside [lo, hi], about four of them.
std::vector<double> nice_ticks(double lo, double hi) {
  const double raw = (hi - lo) / 4.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + step * 1e-9; t += step)
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
  return ticks;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

}  // namespace

void write_line_charts(std::ostream& out, const std::vector<Panel>& panels, const ChartOptions& o) {
  const std::size_t columns = std::max<std::size_t>(1, o.columns);
  const std::size_t rows = (panels.size() + columns - 1) / columns;
  const double margin_left = 48, margin_top = 28, margin_bottom = 34, margin_right = 12;
  const double header = o.title.empty() ? 8.0 : 30.0;
  std::size_t legend_items = 0;
  for (const auto& p : panels) legend_items = std::max(legend_items, p.series.size());
  const double legend_h = o.legend && legend_items > 0 ? 22.0 : 0.0;
  const double width = static_cast<double>(columns) * o.panel_width;
  const double height = header + static_cast<double>(rows) * o.panel_height + legend_h + 8.0;

  Range shared;
  for (const auto& p : panels)
    for (const auto& s : p.series)
      for (double v : s.y) shared.add(v);
  shared.settle();

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!o.title.empty()) {
    out << "<text x=\"" << fmt(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(o.title) << "</text>\n";
  }

  for (std::size_t idx = 0; idx < panels.size(); ++idx) {
    const auto& p = panels[idx];
    const double ox = static_cast<double>(idx % columns) * o.panel_width;
    const double oy = header + static_cast<double>(idx / columns) * o.panel_height;
    const double px0 = ox + margin_left, px1 = ox + o.panel_width - margin_right;
    const double py0 = oy + margin_top, py1 = oy + o.panel_height - margin_bottom;

    Range xr, yr;
    for (const auto& s : p.series) {
      for (double v : s.x) xr.add(v);
      for (double v : s.y) yr.add(v);
    }
    xr.settle();
    yr.settle();
    if (o.shared_y) yr = shared;
    const auto sx = [&](double x) { return px0 + (x - xr.lo) / (xr.hi - xr.lo) * (px1 - px0); };
    const auto sy = [&](double y) { return py1 - (y - yr.lo) / (yr.hi - yr.lo) * (py1 - py0); };

    out << "<g>\n";
    out << "<text x=\"" << fmt((px0 + px1) / 2) << "\" y=\"" << fmt(oy + 16)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.title) << "</text>\n";
    out << "<rect x=\"" << fmt(px0) << "\" y=\"" << fmt(py0) << "\" width=\"" << fmt(px1 - px0)
        << "\" height=\"" << fmt(py1 - py0) << "\" fill=\"none\" stroke=\"#999\"/>\n";
    for (double fx : nice_ticks(xr.lo, xr.hi)) {
      out << "<text x=\"" << fmt(sx(fx)) << "\" y=\"" << fmt(py1 + 12) << "\" text-anchor=\"middle\">"
          << tick(fx) << "</text>\n";
    }
    for (double fy : nice_ticks(yr.lo, yr.hi)) {
      out << "<text x=\"" << fmt(px0 - 4) << "\" y=\"" << fmt(sy(fy) + 3) << "\" text-anchor=\"end\">"
          << tick(fy) << "</text>\n";
    }
    if (!o.x_label.empty()) {
      out << "<text x=\"" << fmt((px0 + px1) / 2) << "\" y=\"" << fmt(py1 + 26)
          << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
    }
    if (!o.y_label.empty()) {
      out << "<text transform=\"translate(" << fmt(ox + 10) << "," << fmt((py0 + py1) / 2)
          << ") rotate(-90)\" text-anchor=\"middle\">" << escape(o.y_label) << "</text>\n";
    }
    for (std::size_t si = 0; si < p.series.size(); ++si) {
      const auto& s = p.series[si];
      const char* colour = kPalette[si % std::size(kPalette)];
      const std::size_t n = std::min(s.x.size(), s.y.size());
      if (n == 0) continue;
      out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < n; ++i) out << (i ? " " : "") << fmt(sx(s.x[i])) << ',' << fmt(sy(s.y[i]));
      out << "\"/>\n";
      if (s.markers) {
        for (std::size_t i = 0; i < n; ++i) {
          out << "<circle cx=\"" << fmt(sx(s.x[i])) << "\" cy=\"" << fmt(sy(s.y[i])) << "\" r=\"2.2\" fill=\""
              << colour << "\"/>\n";
        }
      }
    }
    out << "</g>\n";
  }

  if (legend_h > 0) {
    const Panel* widest = &panels.front();
    for (const auto& p : panels)
      if (p.series.size() > widest->series.size()) widest = &p;
    double x = 12.0;
    const double y = height - legend_h + 4.0;
    for (std::size_t si = 0; si < widest->series.size(); ++si) {
      out << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"10\" height=\"10\" fill=\""
          << kPalette[si % std::size(kPalette)] << "\"/>\n";
      out << "<text x=\"" << fmt(x + 14) << "\" y=\"" << fmt(y + 9) << "\">" << escape(widest->series[si].label)
          << "</text>\n";
      x += 24.0 + 6.0 * static_cast<double>(widest->series[si].label.size());
    }
  }
  out << "</svg>\n";
}

}  // namespace actland::svg
