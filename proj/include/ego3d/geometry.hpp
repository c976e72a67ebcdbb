#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ego3d/skeleton.hpp"

namespace ego3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class Frame { world, local };

/// Per-joint 3D coordinates in centimeters. A `local` pose is expressed in the
/// left camera frame with the pelvis at the origin.
struct Pose3D {
  std::vector<Vec3> joints;
  Frame frame = Frame::world;

  int size() const { return static_cast<int>(joints.size()); }
};

/// p_out = rotation * p + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
  /// (*this) after `inner`.
  RigidTransform compose(const RigidTransform& inner) const {
    return {rotation * inner.rotation, rotation * inner.translation + translation};
  }
};

/// Angle between a limb and the camera's viewing (xy) plane, in (-pi/2, pi/2].
struct LimbAngle {
  double theta = 0.0;
};

/// Unit vector from parent to child joint in camera coordinates.
struct LimbOrientation {
  Vec3 o = Vec3::UnitZ();
};

/// Mean of the skeleton's origin joints (the pelvis).
Vec3 pelvis_position(const Skeleton& skeleton, const Pose3D& pose);

/// Expresses a world-frame pose in the left camera frame and moves the pelvis
/// to the origin. `camera_to_world` maps left-camera coordinates to world.
Pose3D local_pose(const Skeleton& skeleton, const Pose3D& global,
                  const RigidTransform& camera_to_world);

/// child - parent. Throws IndexError on invalid ids.
Vec3 limb_relative(const Pose3D& pose, const Limb& limb);

/// atan2(z, hypot(x, y)). Throws DegenerateLimbError for a zero vector.
LimbAngle limb_view_angle(const Vec3& rel);

/// rel / |rel|. Throws DegenerateLimbError for a zero vector.
LimbOrientation limb_orientation(const Vec3& rel);

}  // namespace ego3d
