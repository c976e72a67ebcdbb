#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "ego3d/camera.hpp"
#include "ego3d/errors.hpp"
#include "ego3d/geometry.hpp"
#include "ego3d/skeleton.hpp"

using namespace ego3d;
using doctest::Approx;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return q.normalized().toRotationMatrix();
}

Vec3 random_vec(std::mt19937_64& rng, double scale = 50.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

Pose3D random_pose(std::mt19937_64& rng, int n) {
  Pose3D p;
  for (int i = 0; i < n; ++i) p.joints.push_back(random_vec(rng));
  return p;
}

}  // namespace

TEST_CASE("skeleton defaults") {
  auto sk = Skeleton::unrealego16();
  CHECK(sk.num_joints() == 16);
  CHECK(sk.estimated_joints().size() == 15);
  CHECK(sk.peh_limbs().size() == 14);
  CHECK(sk.all_limbs().size() == 15);
  for (const auto& l : sk.peh_limbs()) CHECK(sk.parent_index()[l.child] == l.parent);
  const int head = sk.joint_id("head");
  const int neck = sk.joint_id("neck");
  for (const auto& l : sk.peh_limbs()) CHECK_FALSE((l.parent == neck && l.child == head));

  auto ec = Skeleton::egocap17();
  CHECK(ec.num_joints() == 17);
  CHECK(ec.all_limbs().size() == 16);
}

TEST_CASE("skeleton json round trip and validation") {
  auto sk = Skeleton::unrealego16();
  CHECK(Skeleton::from_json(sk.to_json()) == sk);

  auto doc = sk.to_json();
  doc["parent_index"][1] = 0;  // head <-> neck cycle, no root
  CHECK_THROWS_AS(Skeleton::from_json(doc), FormatError);

  doc = sk.to_json();
  doc["peh_limbs"][0] = {0, 5};
  CHECK_THROWS_AS(Skeleton::from_json(doc), FormatError);
}

TEST_CASE("shipped skeleton documents match the built-ins") {
  CHECK(Skeleton::load(std::string(EGO3D_DATA_DIR) + "/skeletons/unrealego16.json") == Skeleton::unrealego16());
  CHECK(Skeleton::load(std::string(EGO3D_DATA_DIR) + "/skeletons/egocap17.json") == Skeleton::egocap17());
}

TEST_CASE("limb_relative") {
  Pose3D p{{Vec3(0, 0, 0), Vec3(3, 0, 4)}, Frame::local};
  CHECK(limb_relative(p, {0, 1}) == Vec3(3, 0, 4));
  CHECK(limb_relative(p, {1, 1}) == Vec3::Zero());
  CHECK_THROWS_AS(limb_relative(p, {0, 2}), IndexError);
  CHECK_THROWS_AS(limb_relative(p, {-1, 0}), IndexError);

  std::mt19937_64 rng(3);
  auto q = random_pose(rng, 16);
  for (int a = 0; a < 16; ++a) {
    for (int b = 0; b < 16; ++b) {
      const Vec3 r = limb_relative(q, {a, b});
      for (int k = 0; k < 3; ++k) CHECK(r[k] == q.joints[b][k] - q.joints[a][k]);
    }
  }
}

TEST_CASE("limb_view_angle examples") {
  CHECK(limb_view_angle({0, 0, 1}).theta == Approx(std::numbers::pi / 2).epsilon(1e-15));
  CHECK(limb_view_angle({0, 0, -1}).theta == Approx(-std::numbers::pi / 2).epsilon(1e-15));
  CHECK(limb_view_angle({1, 0, 0}).theta == 0.0);
  CHECK(limb_view_angle({1, 0, 1}).theta == Approx(std::numbers::pi / 4).epsilon(1e-15));
  CHECK(limb_view_angle({3, 4, 5}).theta == Approx(std::numbers::pi / 4).epsilon(1e-15));
  CHECK_THROWS_AS(limb_view_angle(Vec3::Zero()), DegenerateLimbError);
}

TEST_CASE("limb_orientation examples") {
  auto o = limb_orientation({3, 0, 4}).o;
  CHECK(o.x() == Approx(0.6));
  CHECK(o.y() == 0.0);
  CHECK(o.z() == Approx(0.8));
  CHECK(limb_orientation({0, -2, 0}).o == Vec3(0, -1, 0));
  CHECK_THROWS_AS(limb_orientation(Vec3::Zero()), DegenerateLimbError);

  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 rel = random_vec(rng);
    const Vec3 u = limb_orientation(rel).o;
    CHECK(std::abs(u.norm() - 1.0) < 1e-12);
    CHECK(u.cross(rel).norm() < 1e-9 * rel.norm());
    CHECK(u.dot(rel) > 0.0);
    CHECK(std::abs(std::asin(u.z()) - limb_view_angle(rel).theta) < 1e-9);
  }
}

TEST_CASE("limb_view_angle sign and translation") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = random_vec(rng), b = random_vec(rng), t = random_vec(rng);
    const double th = limb_view_angle(b - a).theta;
    CHECK(std::abs(th) <= std::numbers::pi / 2);
    CHECK((th > 0) == ((b - a).z() > 0));
    CHECK(std::abs(limb_view_angle((b + t) - (a + t)).theta - th) < 1e-12);
  }
}

TEST_CASE("local_pose") {
  auto sk = Skeleton::unrealego16();
  std::mt19937_64 rng(7);

  SUBCASE("identity with pelvis at origin") {
    auto p = random_pose(rng, 16);
    const Vec3 pel = pelvis_position(sk, p);
    for (auto& j : p.joints) j -= pel;
    auto out = local_pose(sk, p, {});
    for (int j = 0; j < 16; ++j) CHECK((out.joints[j] - p.joints[j]).norm() < 1e-12);
    CHECK(out.frame == Frame::local);
  }

  SUBCASE("translation invariance") {
    auto p = random_pose(rng, 16);
    RigidTransform rig{random_rotation(rng), random_vec(rng)};
    auto moved = p;
    for (auto& j : moved.joints) j += Vec3(10, 0, 0);
    RigidTransform rig_moved{rig.rotation, rig.translation + Vec3(10, 0, 0)};
    auto a = local_pose(sk, p, rig);
    auto b = local_pose(sk, moved, rig_moved);
    for (int j = 0; j < 16; ++j) CHECK((a.joints[j] - b.joints[j]).norm() < 1e-9);
  }

  SUBCASE("matrix oracle") {
    for (int trial = 0; trial < 50; ++trial) {
      auto p = random_pose(rng, 16);
      const Mat3 r = random_rotation(rng);
      const Vec3 t = random_vec(rng);
      auto out = local_pose(sk, p, {r, t});
      // Brute force: homogeneous inverse, then subtract the mean of the hips.
      Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
      m.topLeftCorner<3, 3>() = r;
      m.topRightCorner<3, 1>() = t;
      const Eigen::Matrix4d inv = m.inverse();
      std::vector<Vec3> cam;
      for (const auto& j : p.joints) cam.push_back((inv * j.homogeneous()).head<3>());
      const Vec3 pel = 0.5 * (cam[8] + cam[12]);
      for (int j = 0; j < 16; ++j) CHECK((out.joints[j] - (cam[j] - pel)).norm() < 1e-9);
    }
  }

  SUBCASE("rigid world motion is a fixed point") {
    for (int trial = 0; trial < 100; ++trial) {
      auto p = random_pose(rng, 16);
      RigidTransform rig{random_rotation(rng), random_vec(rng)};
      RigidTransform motion{random_rotation(rng), random_vec(rng, 500.0)};
      auto moved = p;
      for (auto& j : moved.joints) j = motion.apply(j);
      auto a = local_pose(sk, p, rig);
      auto b = local_pose(sk, moved, motion.compose(rig));
      for (int j = 0; j < 16; ++j) CHECK((a.joints[j] - b.joints[j]).norm() < 1e-9);
    }
  }

  SUBCASE("joint count mismatch") {
    auto p = random_pose(rng, 15);
    CHECK_THROWS_AS(local_pose(sk, p, {}), DimensionError);
  }
}

TEST_CASE("fisheye projection") {
  auto rig = FisheyeStereoRig::symmetric(64, 12.0);
  const auto& cam = rig.left;

  auto on_axis = fisheye_project({0, 0, 1}, cam);
  CHECK(on_axis.visible);
  CHECK((on_axis.pixel - cam.principal_point).norm() < 1e-12);

  // Edge of the field of view lies on the image circle r = f * fov / 2.
  const double half = cam.fov / 2;
  auto edge = fisheye_project({std::sin(half - 1e-12), 0, std::cos(half - 1e-12)}, cam);
  CHECK((edge.pixel - cam.principal_point).norm() == Approx(cam.focal * half).epsilon(1e-9));

  CHECK_THROWS_AS(fisheye_project(Vec3::Zero(), cam), ProjectionError);

  auto behind = fisheye_project({0.0, 0.2, -1.0}, cam);
  CHECK_FALSE(behind.visible);

  // Round trip through the unprojection over a pixel grid.
  for (double u = 0; u < 64; u += 3.5) {
    for (double v = 0; v < 64; v += 3.5) {
      const Vec2 px(u, v);
      if ((px - cam.principal_point).norm() > cam.focal * half - 1e-6) continue;
      const Vec3 ray = fisheye_unproject(px, cam);
      CHECK(std::abs(ray.norm() - 1.0) < 1e-12);
      auto back = fisheye_project(7.3 * ray, cam);
      CHECK((back.pixel - px).norm() < 1e-4);
    }
  }
}

TEST_CASE("stereo rig") {
  auto rig = FisheyeStereoRig::symmetric(64, 12.0);
  CHECK(rig.baseline == 12.0);
  CHECK(rig.right.position.x() - rig.left.position.x() == Approx(12.0));
  CHECK(FisheyeStereoRig::from_json(rig.to_json()).baseline == rig.baseline);
  auto bad = rig;
  bad.baseline = -1;
  CHECK_THROWS(bad.validate());
  auto cam = rig.left;
  cam.focal = 0;
  CHECK_THROWS_AS(cam.validate(), ParameterError);
  cam = rig.left;
  cam.principal_point = Vec2(100, 10);
  CHECK_THROWS_AS(cam.validate(), ParameterError);

  // Left and right limb-view angles agree: the rel vector is translation invariant.
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Vec3 a = random_vec(rng) + Vec3(0, 0, 100), b = random_vec(rng) + Vec3(0, 0, 100);
    if ((b - a).norm() < 1e-6) continue;
    const double tl = limb_view_angle(rig.to_camera(0, b) - rig.to_camera(0, a)).theta;
    const double tr = limb_view_angle(rig.to_camera(1, b) - rig.to_camera(1, a)).theta;
    CHECK(std::abs(tl - tr) < 1e-12);
  }
}
