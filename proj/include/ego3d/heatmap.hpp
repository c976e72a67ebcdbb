#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ego3d/geometry.hpp"

namespace ego3d {

enum class ChannelKind { joint_confidence, peh_sin, peh_cos };

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from(const std::string& name);

struct HeatmapShape {
  int height = 0;
  int width = 0;
};

/// Single-channel grid, row-major. Pixel (row, col) has its center at
/// continuous coordinates (x = col, y = row).
struct Heatmap {
  int height = 0;
  int width = 0;
  ChannelKind kind = ChannelKind::joint_confidence;
  std::vector<double> values;

  Heatmap() = default;
  Heatmap(HeatmapShape shape, ChannelKind k)
      : height(shape.height), width(shape.width), kind(k),
        values(static_cast<size_t>(shape.height) * shape.width, 0.0) {}

  double& at(int row, int col) { return values[static_cast<size_t>(row) * width + col]; }
  double at(int row, int col) const { return values[static_cast<size_t>(row) * width + col]; }
  HeatmapShape shape() const { return {height, width}; }
};

/// Projected limb in heatmap pixel coordinates.
struct LimbSegment2D {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  bool a_visible = true;
  bool b_visible = true;
};

/// Gaussian confidence around `pixel`; all zeros when `visible` is false.
/// Throws ParameterError for sigma <= 0.
Heatmap joint_heatmap_gt(const Vec2& pixel, bool visible, HeatmapShape shape, double sigma);

struct PehChannels {
  Heatmap sin;
  Heatmap cos;
};

/// Line confidence c(q) = exp(-d(q, seg)^2 / 2 sigma^2) scaled by sin/cos of
/// the limb-view angle. The segment is first clipped to the grid; a segment
/// entirely outside it produces zero channels.
PehChannels peh_gt(const LimbSegment2D& seg, LimbAngle theta, HeatmapShape shape, double sigma);

/// |a - b| clamped below at 1 pixel.
double limb_pixel_length(const LimbSegment2D& seg);

/// Portion of the segment inside [-0.5, W-0.5] x [-0.5, H-0.5], if any.
std::optional<LimbSegment2D> clip_to_grid(const LimbSegment2D& seg, HeatmapShape shape);

double point_segment_distance(const Vec2& q, const Vec2& a, const Vec2& b);

struct JointPeak {
  Vec2 pixel = Vec2::Zero();  // (col, row)
  double confidence = 0.0;
};

/// Argmax with row-major tie-breaking.
JointPeak decode_joint(const Heatmap& h);

struct AngleEstimate {
  double theta = 0.0;
  double confidence = 0.0;
  Vec2 pixel = Vec2::Zero();
};

/// Angle atan2(sin, cos) at the pixel of largest (sin, cos) norm.
AngleEstimate decode_angle(const Heatmap& sin_h, const Heatmap& cos_h);

}  // namespace ego3d
