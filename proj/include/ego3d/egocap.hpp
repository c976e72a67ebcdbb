#pragma once

#include "ego3d/geometry.hpp"
#include "ego3d/render.hpp"

namespace ego3d {

inline constexpr int kEgoCapWidth = 1280;
inline constexpr int kEgoCapHeight = 1024;

/// Crops a 1280x1024 frame to the 1024x1024 window centered on the horizontal
/// focal center, then averages 4x4 blocks down to 256x256.
/// Throws DimensionError for other input sizes, ParameterError if the window
/// does not fit.
RgbImage egocap_crop_downsample(const RgbImage& image, double focal_center_x = 640.0);

/// Millimeters to centimeters.
Pose3D convert_units_mm_to_cm(const Pose3D& pose);

}  // namespace ego3d
