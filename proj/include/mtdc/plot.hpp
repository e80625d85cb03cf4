#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mtdc/workflow.hpp"

namespace mtdc::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<Series> series;
  std::vector<std::pair<double, double>> bands;    // shaded x ranges
  std::vector<std::pair<double, double>> markers;  // points drawn as crosses
  std::optional<std::array<double, 4>> window;     // x0, x1, y0, y1; data outside is clipped
};

/// Panels stacked vertically in one SVG document.
std::string render_svg(std::span<const Panel> panels, double width = 860.0, double panel_height = 340.0);

void write_svg(const std::filesystem::path& path, std::span<const Panel> panels);

/// Writes bode_detF.svg, nyquist_loci.svg and bode_loci.svg, plus the
/// participation_l<i>.svg and station_sensitivity_l<i>.svg overlays when
/// sensitivities were computed. Returns the files written.
std::vector<std::filesystem::path> write_analysis_plots(const std::filesystem::path& dir, const Analysis& analysis);

}  // namespace mtdc::plot
