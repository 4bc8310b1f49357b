#pragma once

#include <string>
#include <vector>

namespace locem {

struct SvgSeries {
  std::string name;
  std::vector<double> xs;
  std::vector<double> ys;
  bool horizontal = false;  // reference line at ys[0] across the x range
};

/// Static line chart, rendered with fixed formatting so identical inputs give
/// byte-identical output. No external plotting dependency.
std::string render_line_chart(const std::vector<SvgSeries>& series, const std::string& x_label,
                              const std::string& y_label, int width = 860, int height = 520);

}  // namespace locem
