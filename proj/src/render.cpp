#include "ego3d/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace {

std::array<float, 3> hsv(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h * 6.0, 6.0);
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {static_cast<float>(r + m), static_cast<float>(g + m), static_cast<float>(b + m)};
}

struct Stroke {
  Vec2 a, b;
  double wa, wb;  // half widths in pixels
  double depth;
  std::array<float, 3> color;
};

}  // namespace

RenderStyle RenderStyle::for_skeleton(const Skeleton& skeleton) {
  RenderStyle style;
  const auto& limbs = skeleton.all_limbs();
  const int n = static_cast<int>(limbs.size());
  for (int i = 0; i < n; ++i) {
    // Hue order interleaves limbs so neighbours in the tree get distinct colors.
    const double hue = std::fmod(i * 0.618033988749895, 1.0);
    style.color.push_back(hsv(hue, 0.85, 1.0));
    const std::string& child = skeleton.joint_names()[limbs[i].child];
    double r = 4.0;
    if (child.find("thigh") != std::string::npos || child.find("hip") != std::string::npos) r = 9.0;
    else if (child.find("calf") != std::string::npos || child.find("knee") != std::string::npos) r = 6.5;
    else if (child.find("foot") != std::string::npos || child.find("ankle") != std::string::npos) r = 5.0;
    else if (child.find("lowerarm") != std::string::npos || child.find("elbow") != std::string::npos) r = 4.5;
    else if (child.find("head") != std::string::npos) r = 8.0;
    style.radius_cm.push_back(r);
  }
  return style;
}

RgbImage render_view(const Skeleton& skeleton, const std::vector<Vec3>& pose_rig,
                     const FisheyeStereoRig& rig_in, int view, int image_size, const RenderStyle& style) {
  RgbImage img(image_size, image_size);
  if (pose_rig.empty()) return img;
  if (static_cast<int>(pose_rig.size()) != skeleton.num_joints()) {
    throw DimensionError("render_view: pose does not match skeleton");
  }
  const FisheyeStereoRig rig = rig_in.rescaled(image_size);
  const FisheyeCamera& cam = rig.camera(view);
  const auto& limbs = skeleton.all_limbs();

  std::vector<Stroke> strokes;
  for (size_t i = 0; i < limbs.size(); ++i) {
    const Vec3 p0 = rig.to_camera(view, pose_rig[limbs[i].parent]);
    const Vec3 p1 = rig.to_camera(view, pose_rig[limbs[i].child]);
    const auto span = fov_interval(p0, p1, cam);
    if (!span) continue;
    const Vec3 q0 = p0 + span->first * (p1 - p0);
    const Vec3 q1 = p0 + span->second * (p1 - p0);
    if (q0.norm() == 0.0 || q1.norm() == 0.0) continue;
    Stroke s;
    s.a = fisheye_project(q0, cam).pixel;
    s.b = fisheye_project(q1, cam).pixel;
    s.wa = style.radius_cm[i] * cam.focal / q0.norm();
    s.wb = style.radius_cm[i] * cam.focal / q1.norm();
    s.depth = 0.5 * (q0.norm() + q1.norm());
    s.color = style.color[i];
    strokes.push_back(s);
  }
  std::stable_sort(strokes.begin(), strokes.end(),
                   [](const Stroke& x, const Stroke& y) { return x.depth > y.depth; });

  for (const auto& s : strokes) {
    const double reach = std::max(s.wa, s.wb) + 1.0;
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.x(), s.b.x()) - reach)));
    const int c1 = std::min(image_size - 1, static_cast<int>(std::ceil(std::max(s.a.x(), s.b.x()) + reach)));
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min(s.a.y(), s.b.y()) - reach)));
    const int r1 = std::min(image_size - 1, static_cast<int>(std::ceil(std::max(s.a.y(), s.b.y()) + reach)));
    const Vec2 ab = s.b - s.a;
    const double len2 = ab.squaredNorm();
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const Vec2 q(c, r);
        const double t = len2 > 0.0 ? std::clamp((q - s.a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        const double dist = (q - (s.a + t * ab)).norm();
        const double width = s.wa + t * (s.wb - s.wa);
        const double cover = std::clamp(width - dist + 0.5, 0.0, 1.0);
        if (cover <= 0.0) continue;
        for (int ch = 0; ch < 3; ++ch) {
          float& px = img.at(r, c, ch);
          px = static_cast<float>(px * (1.0 - cover) + s.color[ch] * cover);
        }
      }
    }
  }
  return img;
}

std::array<RgbImage, 2> render_stereo(const Skeleton& skeleton, const std::vector<Vec3>& pose_rig,
                                      const FisheyeStereoRig& rig, int image_size,
                                      const RenderStyle& style) {
  return {render_view(skeleton, pose_rig, rig, 0, image_size, style),
          render_view(skeleton, pose_rig, rig, 1, image_size, style)};
}

}  // namespace ego3d
