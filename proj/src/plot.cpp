#include "nhse/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "nhse/error.hpp"

namespace nhse {

namespace {

constexpr double kPanelW = 300.0;
constexpr double kPanelH = 240.0;
constexpr double kMargin = 42.0;
constexpr double kTitleH = 30.0;

const char* kSeriesColors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};

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

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(1e-6, std::abs(lo) * 0.05);
      lo -= pad;
      hi += pad;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

// Axis frame for one panel; maps data to pixels.
struct Frame {
  double x0, y0, w, h;
  Range rx, ry;
  double px(double v) const { return x0 + (v - rx.lo) / (rx.hi - rx.lo) * w; }
  double py(double v) const { return y0 + h - (v - ry.lo) / (ry.hi - ry.lo) * h; }
};

void draw_frame(std::ostringstream& svg, const Frame& f, const std::string& title,
                const std::string& xlabel, const std::string& ylabel) {
  svg << "<rect x=\"" << fmt(f.x0) << "\" y=\"" << fmt(f.y0) << "\" width=\"" << fmt(f.w)
      << "\" height=\"" << fmt(f.h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << fmt(f.x0 + f.w / 2) << "\" y=\"" << fmt(f.y0 - 6)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(title) << "</text>\n";
  for (int i = 0; i <= 2; ++i) {
    const double vx = f.rx.lo + (f.rx.hi - f.rx.lo) * i / 2.0;
    const double vy = f.ry.lo + (f.ry.hi - f.ry.lo) * i / 2.0;
    svg << "<text x=\"" << fmt(f.px(vx)) << "\" y=\"" << fmt(f.y0 + f.h + 12)
        << "\" text-anchor=\"middle\" font-size=\"8\">" << tick(vx) << "</text>\n";
    svg << "<text x=\"" << fmt(f.x0 - 3) << "\" y=\"" << fmt(f.py(vy) + 3)
        << "\" text-anchor=\"end\" font-size=\"8\">" << tick(vy) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(f.x0 + f.w / 2) << "\" y=\"" << fmt(f.y0 + f.h + 24)
      << "\" text-anchor=\"middle\" font-size=\"9\">" << escape(xlabel) << "</text>\n";
  svg << "<text x=\"" << fmt(f.x0 - 30) << "\" y=\"" << fmt(f.y0 + f.h / 2)
      << "\" text-anchor=\"middle\" font-size=\"9\" transform=\"rotate(-90 " << fmt(f.x0 - 30)
      << " " << fmt(f.y0 + f.h / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

std::ostringstream open_svg(const std::string& title, std::size_t panels, int columns,
                            double& width, double& height) {
  if (columns < 1) throw InvalidArgument("plot needs at least one column");
  const std::size_t cols = std::max<std::size_t>(1, std::min<std::size_t>(panels, columns));
  const std::size_t rows = panels == 0 ? 1 : (panels + cols - 1) / cols;
  width = cols * kPanelW;
  height = kTitleH + rows * kPanelH;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(height) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << fmt(width / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  return svg;
}

Frame panel_frame(std::size_t index, int columns) {
  const std::size_t col = index % static_cast<std::size_t>(columns);
  const std::size_t row = index / static_cast<std::size_t>(columns);
  Frame f;
  f.x0 = col * kPanelW + kMargin;
  f.y0 = kTitleH + row * kPanelH + 18;
  f.w = kPanelW - kMargin - 12;
  f.h = kPanelH - 18 - 30;
  return f;
}

}  // namespace

std::string skin_color(double value, double scale, double tau) {
  if (!std::isfinite(value) || std::abs(value) <= tau) return "#9a9a9a";
  const double s = scale > 0 ? std::clamp(std::abs(value) / scale, 0.0, 1.0) : 1.0;
  const double strength = 0.35 + 0.65 * std::sqrt(s);
  const int fade = static_cast<int>(std::lround(220 * (1.0 - strength)));
  char buf[8];
  if (value > 0) {
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", 220, fade, fade);
  } else {
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", fade, fade, 220);
  }
  return buf;
}

std::string spectrum_svg(const std::string& title, const std::vector<SpectrumPanel>& panels,
                         double tau, int columns) {
  double width = 0, height = 0;
  std::ostringstream svg = open_svg(title, panels.size(), columns, width, height);
  const int cols = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(panels.size(), columns)));
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const SpectrumPanel& panel = panels[p];
    Frame f = panel_frame(p, cols);
    double scale = 0.0;
    for (const auto& pt : panel.points) {
      f.rx.add(pt.re);
      f.ry.add(pt.im);
      if (std::isfinite(pt.x_ipr)) scale = std::max(scale, std::abs(pt.x_ipr));
    }
    for (const auto& loop : panel.loops) {
      for (const auto& [re, im] : loop) {
        f.rx.add(re);
        f.ry.add(im);
      }
    }
    f.rx.finish();
    f.ry.finish();
    draw_frame(svg, f, panel.title, "Re E", "Im E");
    for (const auto& loop : panel.loops) {
      if (loop.empty()) continue;
      svg << "<polyline fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"0.8\" points=\"";
      for (const auto& [re, im] : loop) svg << fmt(f.px(re)) << "," << fmt(f.py(im)) << " ";
      svg << "\"/>\n";
    }
    // thin reference layer first, thick layer on top
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& pt : panel.points) {
        if (pt.thin != (pass == 0)) continue;
        if (!std::isfinite(pt.re) || !std::isfinite(pt.im)) continue;
        svg << "<circle cx=\"" << fmt(f.px(pt.re)) << "\" cy=\"" << fmt(f.py(pt.im)) << "\" r=\""
            << (pt.thin ? "1.0" : "1.8") << "\" fill=\"" << skin_color(pt.x_ipr, scale, tau)
            << "\"" << (pt.thin ? " fill-opacity=\"0.35\"" : "") << "/>\n";
      }
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string line_svg(const std::string& title, const std::vector<LinePanel>& panels, int columns) {
  double width = 0, height = 0;
  std::ostringstream svg = open_svg(title, panels.size(), columns, width, height);
  const int cols = static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(panels.size(), columns)));
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const LinePanel& panel = panels[p];
    Frame f = panel_frame(p, cols);
    for (const auto& s : panel.series) {
      if (s.x.size() != s.y.size()) throw InvalidArgument("line series x/y lengths differ");
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        f.rx.add(s.x[i]);
        f.ry.add(s.y[i]);
      }
    }
    f.rx.finish();
    f.ry.finish();
    draw_frame(svg, f, panel.title, panel.xlabel, panel.ylabel);
    for (double v : panel.vlines) {
      if (!std::isfinite(v) || v < f.rx.lo || v > f.rx.hi) continue;
      svg << "<line x1=\"" << fmt(f.px(v)) << "\" y1=\"" << fmt(f.y0) << "\" x2=\"" << fmt(f.px(v))
          << "\" y2=\"" << fmt(f.y0 + f.h) << "\" stroke=\"#555\" stroke-dasharray=\"4,3\"/>\n";
    }
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const LineSeries& s = panel.series[si];
      const char* color = kSeriesColors[si % std::size(kSeriesColors)];
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
          svg << fmt(f.px(s.x[i])) << "," << fmt(f.py(s.y[i])) << " ";
        }
      }
      svg << "\"/>\n";
      if (s.markers) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
          svg << "<circle cx=\"" << fmt(f.px(s.x[i])) << "\" cy=\"" << fmt(f.py(s.y[i]))
              << "\" r=\"2\" fill=\"" << color << "\"/>\n";
        }
      }
      svg << "<text x=\"" << fmt(f.x0 + f.w - 4) << "\" y=\"" << fmt(f.y0 + 12 + 11 * si)
          << "\" text-anchor=\"end\" font-size=\"8\" fill=\"" << color << "\">" << escape(s.name)
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace nhse
