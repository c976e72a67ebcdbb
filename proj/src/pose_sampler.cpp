#include "ego3d/pose_sampler.hpp"

#include <cmath>
#include <numbers>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec3 direction(double azimuth_deg, double elevation_deg) {
  const double az = azimuth_deg * kDeg;
  const double el = elevation_deg * kDeg;
  return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
}

double uniform(std::mt19937_64& rng, double center, double half_width) {
  if (half_width == 0.0) return center;
  // Explicit 53-bit mapping keeps sequences identical across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return center + (2.0 * u - 1.0) * half_width;
}

Mat3 euler(double yaw_deg, double pitch_deg, double roll_deg) {
  return (Eigen::AngleAxisd(yaw_deg * kDeg, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch_deg * kDeg, Vec3::UnitX()) *
          Eigen::AngleAxisd(roll_deg * kDeg, Vec3::UnitY()))
      .toRotationMatrix();
}

// Right-side range mirrored to the left side of the body.
DirectionRange mirror(const DirectionRange& r) {
  return {180.0 - r.azimuth, r.azimuth_half_width, r.elevation, r.elevation_half_width};
}

struct SideRanges {
  DirectionRange shoulder, upper_arm, forearm, hip, thigh, shin, toe;
};

// Joint order of Skeleton::unrealego16().
std::vector<DirectionRange> unrealego_ranges(const SideRanges& right, const SideRanges& left) {
  std::vector<DirectionRange> d(16);
  d[0] = {90, 10, 75, 10};  // head
  d[2] = right.shoulder;
  d[3] = right.upper_arm;
  d[4] = right.forearm;
  d[5] = mirror(left.shoulder);
  d[6] = mirror(left.upper_arm);
  d[7] = mirror(left.forearm);
  d[8] = right.hip;
  d[9] = right.thigh;
  d[10] = right.shin;
  d[11] = right.toe;
  d[12] = mirror(left.hip);
  d[13] = mirror(left.thigh);
  d[14] = mirror(left.shin);
  d[15] = mirror(left.toe);
  return d;
}

}  // namespace

PoseSampler PoseSampler::unrealego_default(const FisheyeStereoRig& rig) {
  PoseSampler s;
  s.skeleton = Skeleton::unrealego16();
  s.rig = rig;
  s.limb_length_cm = {22, 0, 17, 28, 25, 17, 28, 25, 52, 43, 41, 13, 52, 43, 41, 13};

  SideRanges standing;
  standing.shoulder = {-5, 10, -10, 8};
  standing.upper_arm = {25, 50, -65, 25};
  standing.forearm = {60, 60, -25, 50};
  standing.hip = {0, 6, -79, 4};
  standing.thigh = {90, 35, -80, 10};
  standing.shin = {-90, 30, -82, 8};
  standing.toe = {90, 20, -10, 15};

  SideRanges crouching = standing;
  crouching.upper_arm = {40, 50, -45, 35};
  crouching.thigh = {90, 25, -15, 20};
  crouching.shin = {-90, 25, -60, 15};

  SideRanges reaching = standing;
  reaching.upper_arm = {70, 40, -5, 30};
  reaching.forearm = {80, 40, 5, 30};

  SideRanges kicking = standing;
  kicking.thigh = {90, 20, -35, 25};
  kicking.shin = {90, 30, -60, 30};

  s.categories = {
      {"standing", unrealego_ranges(standing, standing), 0.0, 8.0},
      {"crouching", unrealego_ranges(crouching, crouching), 30.0, 15.0},
      {"reaching", unrealego_ranges(reaching, reaching), 5.0, 10.0},
      {"kicking", unrealego_ranges(kicking, standing), 5.0, 10.0},
  };

  // Camera axes in the body frame: x right, optical axis down and 25 deg forward.
  const double tilt = 25.0 * kDeg;
  const Vec3 z_c(0.0, std::sin(tilt), -std::cos(tilt));
  const Vec3 x_c = Vec3::UnitX();
  const Vec3 y_c = z_c.cross(x_c);
  s.camera_mount.rotation.col(0) = x_c;
  s.camera_mount.rotation.col(1) = y_c;
  s.camera_mount.rotation.col(2) = z_c;
  s.camera_mount.translation = Vec3(-0.5 * rig.baseline, 10.0, 12.0);
  s.mount_jitter_deg = 12.0;
  s.required_visible = {1, 2, 3, 4, 5, 6, 7};
  s.validate();
  return s;
}

PoseSampler PoseSampler::rest_only() const {
  PoseSampler out = *this;
  for (auto& c : out.categories) {
    c.lean_half_width = 0.0;
    for (auto& d : c.directions) {
      d.azimuth_half_width = 0.0;
      d.elevation_half_width = 0.0;
    }
  }
  out.mount_jitter_deg = 0.0;
  return out;
}

void PoseSampler::validate() const {
  const int n = skeleton.num_joints();
  if (static_cast<int>(limb_length_cm.size()) != n) {
    throw ParameterError("pose sampler: one limb length per joint required");
  }
  for (int j = 0; j < n; ++j) {
    if (j != skeleton.root() && !(limb_length_cm[j] > 0.0)) {
      throw ParameterError("pose sampler: limb length of '" + skeleton.joint_names()[j] +
                           "' must be positive");
    }
  }
  if (categories.empty()) throw ParameterError("pose sampler: no categories");
  for (const auto& c : categories) {
    if (static_cast<int>(c.directions.size()) != n) {
      throw ParameterError("pose sampler: category '" + c.name + "' needs one range per joint");
    }
    for (const auto& d : c.directions) {
      if (d.azimuth_half_width < 0 || d.elevation_half_width < 0 || d.elevation_half_width > 90 ||
          std::fabs(d.elevation) > 90) {
        throw ParameterError("pose sampler: category '" + c.name + "' has an invalid range");
      }
    }
  }
  for (int id : required_visible) {
    if (id < 0 || id >= n) throw ParameterError("pose sampler: required joint out of range");
  }
  if (max_attempts < 1) throw ParameterError("pose sampler: max_attempts must be >= 1");
}

std::vector<Vec3> SampledPose::rig_joints() const {
  std::vector<Vec3> out;
  out.reserve(local.joints.size());
  for (const auto& p : local.joints) out.push_back(p + pelvis_cam);
  return out;
}

SampledPose sample_pose(const PoseSampler& sampler, std::mt19937_64& rng) {
  const Skeleton& sk = sampler.skeleton;
  const int n = sk.num_joints();
  const int root = sk.root();

  // Parents are visited before children.
  std::vector<int> order;
  order.push_back(root);
  for (size_t i = 0; i < order.size(); ++i) {
    for (int j = 0; j < n; ++j) {
      if (sk.parent_index()[j] == order[i]) order.push_back(j);
    }
  }
  std::vector<bool> torso(n, false);
  for (int id : sk.origin_joints()) {
    if (sk.parent_index()[id] == root) torso[id] = true;
  }

  const int num_categories = static_cast<int>(sampler.categories.size());
  for (int attempt = 0; attempt < sampler.max_attempts; ++attempt) {
    SampledPose out;
    out.category = static_cast<int>(rng() % static_cast<uint64_t>(num_categories));
    const CategoryPreset& preset = sampler.categories[out.category];
    const double lean = uniform(rng, preset.lean, preset.lean_half_width);
    const Mat3 lean_rot = Eigen::AngleAxisd(-lean * kDeg, Vec3::UnitX()).toRotationMatrix();

    out.world.frame = Frame::world;
    out.world.joints.assign(n, Vec3::Zero());
    for (int j : order) {
      if (j == root) continue;
      const DirectionRange& r = preset.directions[j];
      Vec3 dir = direction(uniform(rng, r.azimuth, r.azimuth_half_width),
                           uniform(rng, r.elevation, r.elevation_half_width));
      if (torso[j]) dir = lean_rot * dir;
      out.world.joints[j] = out.world.joints[sk.parent_index()[j]] + sampler.limb_length_cm[j] * dir;
    }

    const double jitter = sampler.mount_jitter_deg;
    const Mat3 jit = euler(uniform(rng, 0.0, jitter), uniform(rng, 0.0, jitter), uniform(rng, 0.0, 0.5 * jitter));
    out.camera_to_world = {jit * sampler.camera_mount.rotation, sampler.camera_mount.translation};
    out.local = local_pose(sk, out.world, out.camera_to_world);
    out.pelvis_cam = out.camera_to_world.inverse().apply(pelvis_position(sk, out.world));

    bool ok = true;
    const auto joints = out.rig_joints();
    for (int id : sampler.required_visible) {
      for (int view = 0; view < 2 && ok; ++view) {
        const Vec3 p = sampler.rig.to_camera(view, joints[id]);
        if (p.isZero(0.0) || !fisheye_project(p, sampler.rig.camera(view)).visible) ok = false;
      }
    }
    if (ok) return out;
  }
  throw SamplingError("sample_pose: no pose satisfied the visibility constraint within " +
                      std::to_string(sampler.max_attempts) + " attempts");
}

}  // namespace ego3d
