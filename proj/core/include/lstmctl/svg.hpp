#pragma once

#include <string>
#include <vector>

#include "lstmctl/linalg.hpp"

namespace lstmctl {

struct SvgSeries {
    std::string name;
    Vector y;
    std::string color = "#1f77b4";
    bool step = false;  // draw as a staircase (zero-order hold)
};

/// Static line chart over a shared x axis. Non-finite samples break the line.
std::string svg_line_plot(const std::string& title, const Vector& x, const std::vector<SvgSeries>& series,
                          const std::string& x_label = "t [s]", const std::string& y_label = "");

}  // namespace lstmctl
