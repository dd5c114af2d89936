#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace actland::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::size_t columns = 1;
  double panel_width = 320.0;
  double panel_height = 220.0;
  // One y range for every panel, so small multiples compare directly.
  bool shared_y = true;
  bool legend = true;
};

// A grid of line charts. Series colours are assigned by position within a
// panel, so the same index means the same thing in every panel.
void write_line_charts(std::ostream& out, const std::vector<Panel>& panels, const ChartOptions& options);

}  // namespace actland::svg
