#include "ego3d/sample.hpp"

#include "ego3d/errors.hpp"

namespace ego3d {

std::optional<LimbSegment2D> project_limb(const FisheyeStereoRig& rig, int view, const Vec3& parent_rig,
                                          const Vec3& child_rig) {
  const FisheyeCamera& cam = rig.camera(view);
  const Vec3 p0 = rig.to_camera(view, parent_rig);
  const Vec3 p1 = rig.to_camera(view, child_rig);
  const auto span = fov_interval(p0, p1, cam);
  if (!span) return std::nullopt;
  const Vec3 q0 = p0 + span->first * (p1 - p0);
  const Vec3 q1 = p0 + span->second * (p1 - p0);
  if (q0.isZero(0.0) || q1.isZero(0.0)) return std::nullopt;
  LimbSegment2D seg;
  const Projection a = fisheye_project(q0, cam);
  const Projection b = fisheye_project(q1, cam);
  seg.a = a.pixel;
  seg.b = b.pixel;
  seg.a_visible = span->first == 0.0 && a.visible;
  seg.b_visible = span->second == 1.0 && b.visible;
  return seg;
}

Sample build_sample(const PoseSampler& sampler, const SampledPose& pose, const SampleSizes& sizes,
                    const RenderStyle& style) {
  const Skeleton& sk = sampler.skeleton;
  const double sigma = sizes.effective_sigma();
  const HeatmapShape shape{sizes.heatmap_size, sizes.heatmap_size};
  const FisheyeStereoRig hm_rig = sampler.rig.rescaled(sizes.heatmap_size);
  const auto joints = pose.rig_joints();

  Sample s;
  s.category = pose.category;
  s.local_pose = pose.local;
  s.pelvis_cam = pose.pelvis_cam;
  s.images = render_stereo(sk, joints, sampler.rig, sizes.image_size, style);

  for (int view = 0; view < 2; ++view) {
    for (int id : sk.estimated_joints()) {
      const Vec3 p = hm_rig.to_camera(view, joints[id]);
      Projection proj;
      if (!p.isZero(0.0)) proj = fisheye_project(p, hm_rig.camera(view));
      s.joint_pixels[view].push_back(proj.pixel);
      s.joint_visible[view].push_back(proj.visible);
    }
  }
  const int n_est = static_cast<int>(sk.estimated_joints().size());
  for (int k = 0; k < n_est; ++k) {
    for (int view = 0; view < 2; ++view) {
      s.jh.push_back(joint_heatmap_gt(s.joint_pixels[view][k], s.joint_visible[view][k], shape, sigma));
    }
  }

  for (const Limb& limb : sk.peh_limbs()) {
    const Vec3 rel = limb_relative(pose.local, limb);
    const LimbAngle theta = limb_view_angle(rel);
    s.angles.push_back(theta);
    s.orientations.push_back(limb_orientation(rel));
    double length_sum = 0.0;
    for (int view = 0; view < 2; ++view) {
      const auto seg = project_limb(hm_rig, view, joints[limb.parent], joints[limb.child]);
      PehChannels ch{Heatmap(shape, ChannelKind::peh_sin), Heatmap(shape, ChannelKind::peh_cos)};
      double length = 1.0;
      if (seg) {
        ch = peh_gt(*seg, theta, shape, sigma);
        if (const auto clipped = clip_to_grid(*seg, shape)) length = limb_pixel_length(*clipped);
      }
      length_sum += length;
      s.peh.push_back(std::move(ch.sin));
      s.peh.push_back(std::move(ch.cos));
    }
    s.pixel_lengths.push_back(0.5 * length_sum);
  }
  return s;
}

Sample make_sample(const PoseSampler& sampler, std::mt19937_64& rng, const SampleSizes& sizes) {
  if (sizes.image_size < 8 || sizes.heatmap_size < 4 || sizes.image_size % sizes.heatmap_size != 0) {
    throw ParameterError("make_sample: image size must be a multiple of the heatmap size");
  }
  return build_sample(sampler, sample_pose(sampler, rng), sizes,
                      RenderStyle::for_skeleton(sampler.skeleton));
}

}  // namespace ego3d
