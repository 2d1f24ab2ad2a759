#pragma once

#include <string>
#include <utility>
#include <vector>

namespace vdcal::app {

using XY = std::pair<double, double>;

struct Series {
  std::string name;
  std::string colour;
  std::vector<XY> points;
};

struct ScatterPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<XY> markers;
  std::vector<Series> curves;
};

/// Maps data coordinates to SVG pixels. The data window starts at the origin.
struct PlotFrame {
  double width = 720.0;
  double height = 480.0;
  double left = 70.0;
  double right = 20.0;
  double top = 40.0;
  double bottom = 55.0;
  double x_max = 1.0;
  double y_max = 1.0;

  double px(double x) const;
  double py(double y) const;
};

/// Frame whose axes cover every marker and curve point, rounded up to a tick.
PlotFrame frame_for(const ScatterPlot& plot);

/// One <circle> per marker, one <polyline> per curve; axes are <line>s.
std::string render_svg(const ScatterPlot& plot);

}  // namespace vdcal::app
