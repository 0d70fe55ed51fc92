#include "holeburn/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace holeburn::svg {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;
constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
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
  bool log = false;
  double lo = 0, hi = 1;

  bool admits(double v) const { return std::isfinite(v) && (!log || v > 0); }
  double t(double v) const { return log ? std::log10(v) : v; }
  double frac(double v) const { return (t(v) - lo) / (hi - lo); }
};

Axis make_axis(bool log, const std::vector<double>& values) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values)
    if (a.admits(v)) {
      lo = std::min(lo, a.t(v));
      hi = std::max(hi, a.t(v));
    }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) {
    const double pad = std::max(std::abs(lo) * 0.05, 0.5);
    lo -= pad;
    hi += pad;
  }
  const double margin = 0.04 * (hi - lo);
  a.lo = lo - margin;
  a.hi = hi + margin;
  return a;
}

}  // namespace

std::string render(const Plot& plot) {
  std::vector<double> xs, ys;
  for (const auto& s : plot.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  const Axis ax = make_axis(plot.log_x, xs), ay = make_axis(plot.log_y, ys);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(plot.title) +
       "</text>\n";
  o += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  // Five evenly spaced ticks per axis, in transformed coordinates.
  for (int i = 0; i <= 4; ++i) {
    const double tx = ax.lo + (ax.hi - ax.lo) * i / 4.0, ty = ay.lo + (ay.hi - ay.lo) * i / 4.0;
    const double vx = ax.log ? std::pow(10.0, tx) : tx, vy = ay.log ? std::pow(10.0, ty) : ty;
    const double gx = kLeft + pw * i / 4.0, gy = kTop + ph * (1.0 - i / 4.0);
    o += "<line x1=\"" + num(gx) + "\" y1=\"" + num(kTop + ph) + "\" x2=\"" + num(gx) + "\" y2=\"" + num(kTop + ph + 5) +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(gx) + "\" y=\"" + num(kTop + ph + 18) + "\" text-anchor=\"middle\">" + tick(vx) + "</text>\n";
    o += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(gy) + "\" x2=\"" + num(kLeft) + "\" y2=\"" + num(gy) +
         "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(gy + 4) + "\" text-anchor=\"end\">" + tick(vy) + "</text>\n";
  }
  o += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 15) + "\" text-anchor=\"middle\">" +
       escape(plot.x_label) + "</text>\n";
  o += "<text transform=\"translate(18," + num(kTop + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       escape(plot.y_label) + "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kColors[k % kColors.size()];
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        if (ax.admits(s.x[i]) && ay.admits(s.y[i]))
          o += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"2.5\" fill=\"" + color + "\"/>\n";
    } else {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        if (ax.admits(s.x[i]) && ay.admits(s.y[i])) pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
      if (!pts.empty()) {
        pts.pop_back();
        o += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
      }
    }
    const double ly = kTop + 12 + 16.0 * static_cast<double>(k);
    o += "<rect x=\"" + num(kLeft + pw + 10) + "\" y=\"" + num(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" + color +
         "\"/>\n";
    o += "<text x=\"" + num(kLeft + pw + 24) + "\" y=\"" + num(ly + 1) + "\">" + escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace holeburn::svg
