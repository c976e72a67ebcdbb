#pragma once

#include <array>
#include <vector>

#include "ego3d/camera.hpp"
#include "ego3d/skeleton.hpp"

namespace ego3d {

/// Interleaved RGB image (row-major, HWC), values in [0, 1].
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0.0f) {}
  float& at(int row, int col, int ch) { return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch]; }
  float at(int row, int col, int ch) const {
    return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch];
  }
};

/// Per-limb capsule radius (cm) and flat color, indexed like Skeleton::all_limbs().
struct RenderStyle {
  std::vector<double> radius_cm;
  std::vector<std::array<float, 3>> color;

  static RenderStyle for_skeleton(const Skeleton& skeleton);
};

/// Draws every limb as an anti-aliased capsule whose on-screen half width is
/// radius * focal / distance, far limbs first. `pose_rig` is in the rig (left
/// camera) frame, not pelvis-relative. The camera is rescaled to `image_size`.
RgbImage render_view(const Skeleton& skeleton, const std::vector<Vec3>& pose_rig,
                     const FisheyeStereoRig& rig, int view, int image_size, const RenderStyle& style);

std::array<RgbImage, 2> render_stereo(const Skeleton& skeleton, const std::vector<Vec3>& pose_rig,
                                      const FisheyeStereoRig& rig, int image_size,
                                      const RenderStyle& style);

}  // namespace ego3d
