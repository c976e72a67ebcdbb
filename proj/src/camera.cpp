#include "ego3d/camera.hpp"

#include <cmath>

#include "ego3d/errors.hpp"

namespace ego3d {

void FisheyeCamera::validate() const {
  if (!(focal > 0.0)) throw ParameterError("fisheye camera: focal must be positive");
  if (width <= 0 || height <= 0) throw ParameterError("fisheye camera: empty image");
  if (principal_point.x() < 0.0 || principal_point.x() > width - 1 || principal_point.y() < 0.0 ||
      principal_point.y() > height - 1) {
    throw ParameterError("fisheye camera: principal point outside the image");
  }
  if (!(fov > 0.0)) throw ParameterError("fisheye camera: fov must be positive");
}

Projection fisheye_project(const Vec3& point_cam, const FisheyeCamera& cam) {
  const double radial = std::hypot(point_cam.x(), point_cam.y());
  if (radial == 0.0 && point_cam.z() == 0.0) {
    throw ProjectionError("fisheye_project: point at the camera center");
  }
  Projection out;
  out.view_angle = std::atan2(radial, point_cam.z());
  const double r = cam.focal * out.view_angle;
  if (radial > 0.0) {
    out.pixel = cam.principal_point + r * Vec2(point_cam.x(), point_cam.y()) / radial;
  } else {
    // On the axis (in front of or behind the camera) the azimuth is arbitrary.
    out.pixel = cam.principal_point + Vec2(r, 0.0);
  }
  const double u = out.pixel.x();
  const double v = out.pixel.y();
  out.visible = out.view_angle <= 0.5 * cam.fov && u >= -0.5 && v >= -0.5 && u <= cam.width - 0.5 &&
                v <= cam.height - 0.5;
  return out;
}

Vec3 fisheye_unproject(const Vec2& pixel, const FisheyeCamera& cam) {
  const Vec2 d = pixel - cam.principal_point;
  const double r = d.norm();
  if (r == 0.0) return Vec3::UnitZ();
  const double angle = r / cam.focal;
  const double s = std::sin(angle);
  return {s * d.x() / r, s * d.y() / r, std::cos(angle)};
}

FisheyeStereoRig FisheyeStereoRig::symmetric(int image_size, double baseline_cm, double fov) {
  FisheyeCamera cam;
  cam.width = image_size;
  cam.height = image_size;
  cam.principal_point = Vec2(0.5 * (image_size - 1), 0.5 * (image_size - 1));
  cam.focal = 0.5 * image_size / (0.5 * fov);
  cam.fov = fov;
  FisheyeStereoRig rig;
  rig.left = cam;
  rig.right = cam;
  rig.right.position = Vec3(baseline_cm, 0.0, 0.0);
  rig.baseline = baseline_cm;
  rig.validate();
  return rig;
}

FisheyeStereoRig FisheyeStereoRig::rescaled(int image_size) const {
  FisheyeStereoRig out = *this;
  for (FisheyeCamera* cam : {&out.left, &out.right}) {
    const double sx = static_cast<double>(image_size) / cam->width;
    const double sy = static_cast<double>(image_size) / cam->height;
    // Pixel centers sit at integer coordinates: u' = (u + 0.5) * s - 0.5.
    cam->principal_point = Vec2((cam->principal_point.x() + 0.5) * sx - 0.5,
                                (cam->principal_point.y() + 0.5) * sy - 0.5);
    cam->focal *= sx;
    cam->width = image_size;
    cam->height = image_size;
  }
  return out;
}

void FisheyeStereoRig::validate() const {
  left.validate();
  right.validate();
  if (!(baseline > 0.0)) throw ParameterError("stereo rig: baseline must be positive");
  const Vec3 expected = left.position + Vec3(baseline, 0.0, 0.0);
  if ((right.position - expected).norm() > 1e-9) {
    throw ParameterError("stereo rig: right camera must sit one baseline along +x");
  }
}

namespace {

nlohmann::json camera_json(const FisheyeCamera& c) {
  return {{"focal", c.focal},
          {"principal_point", {c.principal_point.x(), c.principal_point.y()}},
          {"image_size", {c.width, c.height}},
          {"position", {c.position.x(), c.position.y(), c.position.z()}},
          {"fov", c.fov}};
}

FisheyeCamera camera_from(const nlohmann::json& j) {
  try {
    FisheyeCamera c;
    c.focal = j.at("focal").get<double>();
    auto pp = j.at("principal_point").get<std::array<double, 2>>();
    c.principal_point = Vec2(pp[0], pp[1]);
    auto size = j.at("image_size").get<std::array<int, 2>>();
    c.width = size[0];
    c.height = size[1];
    auto pos = j.at("position").get<std::array<double, 3>>();
    c.position = Vec3(pos[0], pos[1], pos[2]);
    c.fov = j.at("fov").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("camera: ") + e.what());
  }
}

}  // namespace

nlohmann::json FisheyeStereoRig::to_json() const {
  return {{"left", camera_json(left)}, {"right", camera_json(right)}, {"baseline", baseline}};
}

FisheyeStereoRig FisheyeStereoRig::from_json(const nlohmann::json& doc) {
  FisheyeStereoRig rig;
  if (!doc.is_object() || !doc.contains("left") || !doc.contains("right") || !doc.contains("baseline")) {
    throw FormatError("rig: expected fields left, right, baseline");
  }
  rig.left = camera_from(doc.at("left"));
  rig.right = camera_from(doc.at("right"));
  rig.baseline = doc.at("baseline").get<double>();
  rig.validate();
  return rig;
}

}  // namespace ego3d

namespace ego3d {

std::optional<std::pair<double, double>> fov_interval(const Vec3& p0, const Vec3& p1,
                                                      const FisheyeCamera& cam) {
  const double half = 0.5 * cam.fov;
  auto inside = [&](double t) {
    const Vec3 p = p0 + t * (p1 - p0);
    const double radial = std::hypot(p.x(), p.y());
    if (radial == 0.0 && p.z() == 0.0) return false;
    return std::atan2(radial, p.z()) <= half;
  };
  // The cone is convex for fov <= pi, so the in-view part is one interval.
  constexpr int kSteps = 64;
  int first = -1, last = -1;
  for (int i = 0; i <= kSteps; ++i) {
    if (inside(static_cast<double>(i) / kSteps)) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) return std::nullopt;
  auto refine = [&](double in, double out) {
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (in + out);
      (inside(mid) ? in : out) = mid;
    }
    return in;
  };
  double t0 = static_cast<double>(first) / kSteps;
  double t1 = static_cast<double>(last) / kSteps;
  if (first > 0) t0 = refine(t0, static_cast<double>(first - 1) / kSteps);
  if (last < kSteps) t1 = refine(t1, static_cast<double>(last + 1) / kSteps);
  return std::make_pair(t0, t1);
}

}  // namespace ego3d
