#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ego3d/heatmap.hpp"
#include "ego3d/render.hpp"

namespace ego3d {

struct LineSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line chart.
void write_svg_lines(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<LineSeries>& series);

/// Standalone SVG bar chart with optional error bars (empty `errors` = none).
void write_svg_bars(const std::filesystem::path& path, const std::string& title, const std::string& y_label,
                    const std::vector<std::string>& labels, const std::vector<double>& values,
                    const std::vector<double>& errors);

/// Binary PPM (P6).
void write_ppm(const std::filesystem::path& path, const RgbImage& image);

/// Confidence map as grayscale; signed maps (sin channels) as blue/red.
RgbImage colorize(const Heatmap& h, int scale = 1);

/// Hue = limb-view angle, brightness = confidence, for one limb's (sin, cos) pair.
RgbImage colorize_peh(const Heatmap& sin_h, const Heatmap& cos_h, int scale = 1);

/// Nearest-neighbour upscale of `base` blended with a heatmap overlay.
RgbImage overlay(const RgbImage& base, const RgbImage& layer, float alpha);

}  // namespace ego3d
