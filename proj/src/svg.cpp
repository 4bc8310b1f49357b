#include "locem/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace locem {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// largest {1,2,5} * 10^k step not exceeding the raw interval
double nice_step(double range, int target_ticks) {
  if (range <= 0) return 1.0;
  const double raw = range / target_ticks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double mult : {5.0, 2.0, 1.0})
    if (mult * mag <= raw) return mult * mag;
  return mag;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

std::string render_line_chart(const std::vector<SvgSeries>& series, const std::string& x_label,
                              const std::string& y_label, int width, int height) {
  if (series.empty()) throw std::invalid_argument("svg chart: no series");
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool have_x = false, have_y = false;
  for (const auto& s : series) {
    for (double x : s.xs) {
      x_min = have_x ? std::min(x_min, x) : x;
      x_max = have_x ? std::max(x_max, x) : x;
      have_x = true;
    }
    for (double y : s.ys) {
      y_min = have_y ? std::min(y_min, y) : y;
      y_max = have_y ? std::max(y_max, y) : y;
      have_y = true;
    }
  }
  if (!have_x) {
    x_min = 0;
    x_max = 1;
  }
  if (x_max - x_min < 1e-12) x_max = x_min + 1;
  if (y_max - y_min < 1e-12) y_max = y_min + 1;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double margin_left = 70, margin_right = 180, margin_top = 30, margin_bottom = 60;
  const double plot_w = width - margin_left - margin_right;
  const double plot_h = height - margin_top - margin_bottom;
  auto px = [&](double x) { return margin_left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return margin_top + (y_max - y) / (y_max - y_min) * plot_h; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  // axes
  out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(margin_top) << "\" x2=\""
      << fmt(margin_left) << "\" y2=\"" << fmt(margin_top + plot_h)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(margin_top + plot_h)
      << "\" x2=\"" << fmt(margin_left + plot_w) << "\" y2=\"" << fmt(margin_top + plot_h)
      << "\" stroke=\"black\" stroke-width=\"1\"/>\n";

  const double x_step = nice_step(x_max - x_min, 6);
  for (double t = std::ceil(x_min / x_step) * x_step; t <= x_max + 1e-9; t += x_step) {
    out << "<line x1=\"" << fmt(px(t)) << "\" y1=\"" << fmt(margin_top + plot_h) << "\" x2=\""
        << fmt(px(t)) << "\" y2=\"" << fmt(margin_top + plot_h + 5)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << fmt(px(t)) << "\" y=\"" << fmt(margin_top + plot_h + 20)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << fmt(t)
        << "</text>\n";
  }
  const double y_step = nice_step(y_max - y_min, 6);
  for (double t = std::ceil(y_min / y_step) * y_step; t <= y_max + 1e-9; t += y_step) {
    out << "<line x1=\"" << fmt(margin_left - 5) << "\" y1=\"" << fmt(py(t)) << "\" x2=\""
        << fmt(margin_left) << "\" y2=\"" << fmt(py(t))
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << fmt(margin_left - 10) << "\" y=\"" << fmt(py(t) + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << fmt(t)
        << "</text>\n";
    out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(py(t)) << "\" x2=\""
        << fmt(margin_left + plot_w) << "\" y2=\"" << fmt(py(t))
        << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
  }

  out << "<text x=\"" << fmt(margin_left + plot_w / 2) << "\" y=\"" << fmt(height - 15)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" << x_label
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << fmt(margin_top + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fmt(margin_top + plot_h / 2) << ")\">" << y_label << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    const char* color = kPalette[s % (sizeof kPalette / sizeof kPalette[0])];
    if (ser.horizontal) {
      if (ser.ys.empty()) continue;
      out << "<line x1=\"" << fmt(margin_left) << "\" y1=\"" << fmt(py(ser.ys[0])) << "\" x2=\""
          << fmt(margin_left + plot_w) << "\" y2=\"" << fmt(py(ser.ys[0])) << "\" stroke=\""
          << color << "\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n";
    } else {
      if (ser.xs.size() != ser.ys.size())
        throw std::invalid_argument("svg chart: series size mismatch");
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < ser.xs.size(); ++i) {
        if (i) out << ' ';
        out << fmt(px(ser.xs[i])) << ',' << fmt(py(ser.ys[i]));
      }
      out << "\"/>\n";
      for (std::size_t i = 0; i < ser.xs.size(); ++i)
        out << "<circle cx=\"" << fmt(px(ser.xs[i])) << "\" cy=\"" << fmt(py(ser.ys[i]))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
    const double ly = margin_top + 16 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << fmt(margin_left + plot_w + 12) << "\" y1=\"" << fmt(ly - 4)
        << "\" x2=\"" << fmt(margin_left + plot_w + 34) << "\" y2=\"" << fmt(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (ser.horizontal) out << " stroke-dasharray=\"6,4\"";
    out << "/>\n";
    out << "<text x=\"" << fmt(margin_left + plot_w + 40) << "\" y=\"" << fmt(ly)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << ser.name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace locem
