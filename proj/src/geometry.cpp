#include "ego3d/geometry.hpp"

#include <cmath>
#include <string>

#include "ego3d/errors.hpp"

namespace ego3d {

Vec3 pelvis_position(const Skeleton& skeleton, const Pose3D& pose) {
  if (pose.size() != skeleton.num_joints()) {
    throw DimensionError("pose has " + std::to_string(pose.size()) + " joints, skeleton '" +
                         skeleton.name() + "' has " + std::to_string(skeleton.num_joints()));
  }
  Vec3 sum = Vec3::Zero();
  for (int id : skeleton.origin_joints()) sum += pose.joints[id];
  return sum / static_cast<double>(skeleton.origin_joints().size());
}

Pose3D local_pose(const Skeleton& skeleton, const Pose3D& global,
                  const RigidTransform& camera_to_world) {
  const RigidTransform world_to_camera = camera_to_world.inverse();
  const Vec3 pelvis = world_to_camera.apply(pelvis_position(skeleton, global));
  Pose3D out;
  out.frame = Frame::local;
  out.joints.reserve(global.joints.size());
  for (const auto& p : global.joints) out.joints.push_back(world_to_camera.apply(p) - pelvis);
  return out;
}

Vec3 limb_relative(const Pose3D& pose, const Limb& limb) {
  const int n = pose.size();
  if (limb.parent < 0 || limb.parent >= n || limb.child < 0 || limb.child >= n) {
    throw IndexError("limb (" + std::to_string(limb.parent) + ", " + std::to_string(limb.child) +
                     ") out of range for a " + std::to_string(n) + "-joint pose");
  }
  return pose.joints[limb.child] - pose.joints[limb.parent];
}

LimbAngle limb_view_angle(const Vec3& rel) {
  if (rel.isZero(0.0)) throw DegenerateLimbError("limb_view_angle: zero-length limb");
  return {std::atan2(rel.z(), std::hypot(rel.x(), rel.y()))};
}

LimbOrientation limb_orientation(const Vec3& rel) {
  const double norm = rel.norm();
  if (norm == 0.0) throw DegenerateLimbError("limb_orientation: zero-length limb");
  return {rel / norm};
}

}  // namespace ego3d
