#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sle6 {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double x);

/// Comma-joined row terminated by '\n'.
void write_row(std::ostream& out, const std::vector<std::string>& cells);

/// Opens a file for writing, creating parent directories. Throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line-plot SVG (optionally log-log) for quick inspection.
void write_svg_plot(std::ostream& out, std::string_view title,
                    const std::vector<PlotSeries>& series, bool log_log = false);

}  // namespace sle6
