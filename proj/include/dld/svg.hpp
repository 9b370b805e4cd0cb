#pragma once

#include <string>
#include <vector>

namespace dld {

struct SvgSeries {
    std::string name;
    std::vector<double> x, y;
    bool markers = false;
};

/// Minimal line plot with axes, ticks and a legend.
std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<SvgSeries>& series, bool equal_aspect = false);

}  // namespace dld
