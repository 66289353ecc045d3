#pragma once

#include <string>
#include <vector>

namespace wirerecon::report {

/// Shortest round-trip decimal rendering of a double (deterministic,
/// locale-independent).
std::string format_double(double v);

/// One polyline series of an x/y plot.
struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal SVG line plot: axes, tick labels, one polyline per series.
/// No timestamps or external references; output is byte-stable.
std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          int width = 720, int height = 420);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace wirerecon::report
