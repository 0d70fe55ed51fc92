#pragma once

#include <string>
#include <vector>

// Minimal self-contained SVG line plots for report output.
namespace holeburn::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // points instead of a polyline
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

// Non-finite points, and non-positive ones on log axes, are skipped.
std::string render(const Plot& plot);

}  // namespace holeburn::svg
