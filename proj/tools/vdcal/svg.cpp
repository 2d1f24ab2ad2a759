#include "svg.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace vdcal::app {

namespace {

double nice_step(double span, int ticks) {
  const double raw = span / ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (const double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

double round_up(double v, double step) { return std::ceil(v / step - 1e-9) * step; }

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

}  // namespace

double PlotFrame::px(double x) const { return left + x / x_max * (width - left - right); }

double PlotFrame::py(double y) const {
  return height - bottom - y / y_max * (height - top - bottom);
}

PlotFrame frame_for(const ScatterPlot& plot) {
  double xm = 0.0, ym = 0.0;
  const auto scan = [&](const XY& p) {
    if (std::isfinite(p.first)) xm = std::max(xm, p.first);
    if (std::isfinite(p.second)) ym = std::max(ym, p.second);
  };
  for (const auto& p : plot.markers) scan(p);
  for (const auto& c : plot.curves) std::for_each(c.points.begin(), c.points.end(), scan);
  if (xm <= 0.0) xm = 1.0;
  if (ym <= 0.0) ym = 1.0;
  PlotFrame f;
  f.x_max = round_up(xm, nice_step(xm, 5));
  f.y_max = round_up(ym, nice_step(ym, 5));
  return f;
}

std::string render_svg(const ScatterPlot& plot) {
  const auto f = frame_for(plot);
  std::string s;
  auto out = std::back_inserter(s);
  fmt::format_to(out,
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
                 "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
                 f.width, f.height);
  fmt::format_to(out, "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", f.width, f.height);
  fmt::format_to(out, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                 f.width / 2, escape(plot.title));

  const double x0 = f.px(0), y0 = f.py(0);
  fmt::format_to(out, "<g stroke=\"black\">\n");
  fmt::format_to(out, "<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\"/>\n", x0, y0,
                 f.px(f.x_max), y0);
  fmt::format_to(out, "<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\"/>\n", x0, y0,
                 x0, f.py(f.y_max));
  fmt::format_to(out, "</g>\n");

  const double xs = nice_step(f.x_max, 5), ys = nice_step(f.y_max, 5);
  for (int i = 0; i * xs <= f.x_max * (1 + 1e-9); ++i) {
    fmt::format_to(out, "<text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"middle\">{:g}</text>\n",
                   f.px(i * xs), y0 + 16, i * xs);
  }
  for (int i = 0; i * ys <= f.y_max * (1 + 1e-9); ++i) {
    fmt::format_to(out, "<text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"end\">{:g}</text>\n",
                   x0 - 6, f.py(i * ys) + 4, i * ys);
  }
  fmt::format_to(out, "<text x=\"{:.3f}\" y=\"{:.3f}\" text-anchor=\"middle\">{}</text>\n",
                 f.px(f.x_max / 2), f.height - 14, escape(plot.x_label));
  fmt::format_to(out,
                 "<text x=\"18\" y=\"{0:.3f}\" text-anchor=\"middle\" "
                 "transform=\"rotate(-90 18 {0:.3f})\">{1}</text>\n",
                 f.py(f.y_max / 2), escape(plot.y_label));

  fmt::format_to(out, "<g fill=\"#4a4a4a\" fill-opacity=\"0.45\">\n");
  for (const auto& [x, y] : plot.markers) {
    fmt::format_to(out, "<circle cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"2.5\"/>\n", f.px(x), f.py(y));
  }
  fmt::format_to(out, "</g>\n");

  double legend_y = f.top + 6;
  for (const auto& c : plot.curves) {
    fmt::format_to(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"",
                   c.colour);
    bool first = true;
    for (const auto& [x, y] : c.points) {
      fmt::format_to(out, "{}{:.3f},{:.3f}", first ? "" : " ", f.px(x), f.py(y));
      first = false;
    }
    fmt::format_to(out, "\"><title>{}</title></polyline>\n", escape(c.name));
    const double lx = f.width - f.right - 120;
    fmt::format_to(out,
                   "<line x1=\"{0:.3f}\" y1=\"{1:.3f}\" x2=\"{2:.3f}\" y2=\"{1:.3f}\" "
                   "stroke=\"{3}\" stroke-width=\"2\"/>\n",
                   lx, legend_y, lx + 24, c.colour);
    fmt::format_to(out, "<text x=\"{:.3f}\" y=\"{:.3f}\">{}</text>\n", lx + 30, legend_y + 4,
                   escape(c.name));
    legend_y += 18;
  }
  s += "</svg>\n";
  return s;
}

}  // namespace vdcal::app
