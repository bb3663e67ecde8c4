#pragma once

#include <string>
#include <vector>

namespace sgdlb::cli {

struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct ScatterGroup {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

// Minimal self-contained SVG charts: axes, tick labels, polylines, legend.
// Non-finite points (and non-positive ones on a log axis) are dropped.
std::string RenderLineChart(const std::string& title,
                            const std::vector<LineSeries>& series,
                            bool log_y);

std::string RenderScatter(const std::string& title,
                          const std::vector<ScatterGroup>& groups);

}  // namespace sgdlb::cli
