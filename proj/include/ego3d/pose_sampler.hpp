#pragma once

#include <random>
#include <string>
#include <vector>

#include "ego3d/camera.hpp"
#include "ego3d/geometry.hpp"
#include "ego3d/skeleton.hpp"

namespace ego3d {

/// Direction of a joint from its parent in the body frame (x right, y forward,
/// z up). Azimuth is measured from +x toward +y; all values in degrees.
struct DirectionRange {
  double azimuth = 0.0;
  double azimuth_half_width = 0.0;
  double elevation = 0.0;
  double elevation_half_width = 0.0;
};

/// A named motion preset: one direction range per joint (ignored for the root)
/// plus a torso lean applied to the limbs leaving the root toward the origin joints.
struct CategoryPreset {
  std::string name;
  std::vector<DirectionRange> directions;
  double lean = 0.0;
  double lean_half_width = 0.0;
};

struct PoseSampler {
  Skeleton skeleton;
  FisheyeStereoRig rig;
  std::vector<double> limb_length_cm;  // per joint, distance to its parent (root: unused)
  std::vector<CategoryPreset> categories;
  RigidTransform camera_mount;         // left camera -> body frame at rest
  double mount_jitter_deg = 0.0;       // half width of yaw/pitch/roll jitter
  std::vector<int> required_visible;   // joints that must be in view of both cameras
  int max_attempts = 1000;

  /// Glasses-style rig looking down at a 16-joint body with four presets
  /// (standing, crouching, reaching, kicking).
  static PoseSampler unrealego_default(const FisheyeStereoRig& rig);
  /// Same sampler with every range collapsed to its center.
  PoseSampler rest_only() const;

  void validate() const;
};

struct SampledPose {
  Pose3D world;                    // body frame, cm
  RigidTransform camera_to_world;  // left camera -> body frame
  Pose3D local;                    // pelvis-relative, left camera frame
  Vec3 pelvis_cam = Vec3::Zero();  // pelvis in the left camera frame
  int category = 0;

  /// Joints in the rig (left camera) frame.
  std::vector<Vec3> rig_joints() const;
};

/// Rejection-samples a pose whose required joints are visible in both views.
/// Throws SamplingError when the attempt budget runs out.
SampledPose sample_pose(const PoseSampler& sampler, std::mt19937_64& rng);

}  // namespace ego3d
