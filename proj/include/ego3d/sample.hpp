#pragma once

#include <array>
#include <random>
#include <vector>

#include "ego3d/camera.hpp"
#include "ego3d/heatmap.hpp"
#include "ego3d/pose_sampler.hpp"
#include "ego3d/render.hpp"

namespace ego3d {

struct SampleSizes {
  int image_size = 64;
  int heatmap_size = 16;
  /// Gaussian width in heatmap pixels; <= 0 selects 1 px per 64 heatmap pixels.
  double sigma = 0.0;

  double effective_sigma() const { return sigma > 0.0 ? sigma : heatmap_size / 64.0; }
};

/// One binocular training example with all ground truth derived from its pose.
///
/// Heatmap channel orders:
///   jh:  joint-major over the estimated joints, (left, right) per joint.
///   peh: limb-major over the embedding limbs, (sin_L, cos_L, sin_R, cos_R) per limb.
struct Sample {
  std::array<RgbImage, 2> images;
  Pose3D local_pose;
  Vec3 pelvis_cam = Vec3::Zero();
  std::vector<Heatmap> jh;
  std::vector<Heatmap> peh;
  std::vector<LimbOrientation> orientations;  // per embedding limb
  std::vector<LimbAngle> angles;              // per embedding limb
  std::vector<double> pixel_lengths;          // per embedding limb, mean over views, >= 1
  std::array<std::vector<Vec2>, 2> joint_pixels;  // per view, per estimated joint, heatmap coords
  std::array<std::vector<bool>, 2> joint_visible;
  int category = 0;
};

/// Ground truth for an already sampled pose.
Sample build_sample(const PoseSampler& sampler, const SampledPose& pose, const SampleSizes& sizes,
                    const RenderStyle& style);

Sample make_sample(const PoseSampler& sampler, std::mt19937_64& rng, const SampleSizes& sizes);

/// Visible part of a limb in one view, projected to the rig's pixel grid.
std::optional<LimbSegment2D> project_limb(const FisheyeStereoRig& rig, int view, const Vec3& parent_rig,
                                          const Vec3& child_rig);

}  // namespace ego3d
