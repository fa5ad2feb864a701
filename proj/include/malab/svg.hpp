#pragma once

#include <string>
#include <vector>

namespace malab {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;  // scatter points instead of a polyline
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  int width = 640;
  int height = 420;
};

/// Fixed-size SVG line/scatter plot. Output depends only on the inputs, so
/// reruns are byte-identical. Throws ParseError if no series has a point
/// that is finite (and positive on log axes).
std::string line_plot(const std::vector<Series>& series, const PlotOptions& opts);

}  // namespace malab
