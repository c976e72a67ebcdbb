#pragma once

#include <optional>
#include <utility>

#include <nlohmann/json.hpp>

#include "ego3d/geometry.hpp"

namespace ego3d {

/// Equidistant fisheye camera: image radius = focal * (angle from optical axis).
/// Camera frame: x right, y down, z along the optical axis.
struct FisheyeCamera {
  double focal = 1.0;            // pixels per radian
  Vec2 principal_point = Vec2::Zero();
  int width = 0;
  int height = 0;
  Vec3 position = Vec3::Zero();  // offset in the rig (left camera) frame, cm
  double fov = 3.14159265358979323846;  // full field of view, radians

  /// Throws ParameterError unless focal > 0 and the principal point is inside the image.
  void validate() const;
};

struct Projection {
  Vec2 pixel = Vec2::Zero();
  double view_angle = 0.0;  // angle from the optical axis
  bool visible = false;
};

/// Projects a point given in this camera's own frame. Throws ProjectionError at the origin.
Projection fisheye_project(const Vec3& point_cam, const FisheyeCamera& cam);

/// Unit ray through `pixel`, inverse of fisheye_project up to scale.
Vec3 fisheye_unproject(const Vec2& pixel, const FisheyeCamera& cam);

/// Two identical fisheye cameras related by a pure translation along the rig x axis.
/// The rig frame is the left camera frame.
struct FisheyeStereoRig {
  FisheyeCamera left;
  FisheyeCamera right;
  double baseline = 0.0;

  /// A rig whose image circle (at fov) spans the image width.
  static FisheyeStereoRig symmetric(int image_size, double baseline_cm,
                                    double fov = 3.14159265358979323846);

  const FisheyeCamera& camera(int view) const { return view == 0 ? left : right; }
  /// Rig-frame point expressed in the frame of camera `view` (0 = left, 1 = right).
  Vec3 to_camera(int view, const Vec3& p_rig) const { return p_rig - camera(view).position; }
  Projection project(int view, const Vec3& p_rig) const {
    return fisheye_project(to_camera(view, p_rig), camera(view));
  }
  /// Same rig with pixel geometry rescaled to a new square resolution.
  FisheyeStereoRig rescaled(int image_size) const;

  void validate() const;
  nlohmann::json to_json() const;
  static FisheyeStereoRig from_json(const nlohmann::json& doc);
};

}  // namespace ego3d

namespace ego3d {

/// Parameter interval [t0, t1] of the 3D segment p0 + t (p1 - p0), given in the
/// camera's frame, that lies inside the field-of-view cone. Empty when no part
/// of the segment is in view.
std::optional<std::pair<double, double>> fov_interval(const Vec3& p0, const Vec3& p1,
                                                      const FisheyeCamera& cam);

}  // namespace ego3d
