#pragma once

#include <string>
#include <vector>

namespace nobox::cli {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotLabels {
  std::string title;
  std::string x;
  std::string y;
};

/// Self-contained SVG line chart with axes, ticks and a legend. Series with a
/// single point are drawn as markers only.
std::string line_plot_svg(const PlotLabels& labels, const std::vector<Series>& series);

}  // namespace nobox::cli
