#include "malab/svg.hpp"

#include "malab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace malab {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

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

struct Axis {
  double lo, hi;
  bool log;
  double map(double v) const { return log ? std::log10(v) : v; }
  double unmap(double t) const { return log ? std::pow(10.0, t) : t; }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0); }

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotOptions& opts) {
  Axis ax{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), opts.log_x};
  Axis ay{ax.lo, ax.hi, opts.log_y};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], ax.log) || !usable(s.y[i], ay.log)) continue;
      ax.lo = std::min(ax.lo, ax.map(s.x[i]));
      ax.hi = std::max(ax.hi, ax.map(s.x[i]));
      ay.lo = std::min(ay.lo, ay.map(s.y[i]));
      ay.hi = std::max(ay.hi, ay.map(s.y[i]));
    }
  }
  if (!(ax.lo <= ax.hi)) throw ParseError("nothing to plot");
  for (Axis* a : {&ax, &ay}) {
    if (a->hi - a->lo < 1e-12) {
      a->lo -= 0.5;
      a->hi += 0.5;
    }
  }

  const double left = 70, right = 20, top = 40, bottom = 55;
  const double pw = opts.width - left - right, ph = opts.height - top - bottom;
  const auto px = [&](double v) { return left + (ax.map(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
  const auto py = [&](double v) { return top + ph - (ay.map(v) - ay.lo) / (ay.hi - ay.lo) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opts.width) + "\" height=\"" +
         std::to_string(opts.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!opts.title.empty()) {
    out += "<text x=\"" + num(opts.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(opts.title) + "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double tx = ax.lo + (ax.hi - ax.lo) * k / 4, ty = ay.lo + (ay.hi - ay.lo) * k / 4;
    const double sx = left + pw * k / 4, sy = top + ph - ph * k / 4;
    out += "<line x1=\"" + num(sx) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(sx) + "\" y2=\"" +
           num(top + ph + 5) + "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(sx) + "\" y=\"" + num(top + ph + 18) + "\" text-anchor=\"middle\">" +
           tick_label(ax.unmap(tx)) + "</text>\n";
    out += "<line x1=\"" + num(left - 5) + "\" y1=\"" + num(sy) + "\" x2=\"" + num(left) + "\" y2=\"" + num(sy) +
           "\" stroke=\"black\"/>\n";
    out += "<text x=\"" + num(left - 8) + "\" y=\"" + num(sy + 4) + "\" text-anchor=\"end\">" +
           tick_label(ay.unmap(ty)) + "</text>\n";
  }
  const std::string xl = opts.x_label + (opts.log_x ? " (log)" : "");
  const std::string yl = opts.y_label + (opts.log_y ? " (log)" : "");
  out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(opts.height - 12.0) + "\" text-anchor=\"middle\">" +
         escape(xl) + "</text>\n";
  out += "<text x=\"16\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         num(top + ph / 2) + ")\">" + escape(yl) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], ax.log) || !usable(s.y[i], ay.log)) continue;
      if (s.markers) {
        out += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"2.5\" fill=\"" + color +
               "\"/>\n";
      } else {
        pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
      }
    }
    if (!pts.empty()) {
      pts.pop_back();
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts +
             "\"/>\n";
    }
    const double ly = top + 14 + 16.0 * si;
    out += "<line x1=\"" + num(left + pw - 120) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(left + pw - 100) +
           "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(left + pw - 95) + "\" y=\"" + num(ly + 4) + "\">" + escape(s.name) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace malab
