#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Geometry>

#include "ego3d/errors.hpp"
#include "ego3d/metrics.hpp"

using namespace ego3d;
using doctest::Approx;

namespace {

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized().toRotationMatrix();
}

Pose3D random_pose(std::mt19937_64& rng, int n = 16, double scale = 40.0) {
  std::normal_distribution<double> g(0.0, scale);
  Pose3D p;
  p.frame = Frame::local;
  for (int i = 0; i < n; ++i) p.joints.emplace_back(g(rng), g(rng), g(rng));
  return p;
}

std::vector<int> all_joints(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

TEST_CASE("mpjpe") {
  std::mt19937_64 rng(1);
  auto gt = random_pose(rng);
  const auto joints = all_joints(16);
  CHECK(mpjpe(gt, gt, joints) == 0.0);
  auto shifted = gt;
  for (auto& j : shifted.joints) j += Vec3(0, 3, 4);
  CHECK(mpjpe(shifted, gt, joints) == Approx(5.0).epsilon(1e-12));

  for (int t = 0; t < 20; ++t) {
    auto a = random_pose(rng), b = random_pose(rng);
    std::vector<int> subset = {1, 3, 4, 9, 15};
    double sum = 0.0;
    for (int j : subset) {
      const Vec3 d = a.joints[j] - b.joints[j];
      sum += std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
    }
    CHECK(std::abs(mpjpe(a, b, subset) - sum / 5.0) < 1e-12);

    // Consistent relabeling leaves the value unchanged.
    std::vector<int> perm = all_joints(16);
    std::shuffle(perm.begin(), perm.end(), rng);
    Pose3D pa, pb;
    for (int j : perm) {
      pa.joints.push_back(a.joints[j]);
      pb.joints.push_back(b.joints[j]);
    }
    CHECK(std::abs(mpjpe(pa, pb, joints) - mpjpe(a, b, joints)) < 1e-12);
  }
  CHECK_THROWS_AS(mpjpe(gt, random_pose(rng, 15), joints), DimensionError);
}

TEST_CASE("procrustes exact recovery") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> sc(0.2, 5.0);
  const auto joints = all_joints(16);
  for (int t = 0; t < 100; ++t) {
    auto gt = random_pose(rng);
    const Mat3 r = random_rotation(rng);
    const double s = sc(rng);
    const Vec3 tr = random_pose(rng, 1, 100.0).joints[0];
    Pose3D pred = gt;
    for (auto& j : pred.joints) j = s * (r * j) + tr;
    auto fit = procrustes_fit(pred.joints, gt.joints);
    CHECK(similarity_residual(fit, pred.joints, gt.joints) < 1e-9);
    CHECK(fit.scale == Approx(1.0 / s).epsilon(1e-9));
    CHECK(pa_mpjpe(pred, gt, joints) < 1e-6);
  }
  auto gt = random_pose(rng);
  auto same = procrustes_fit(gt.joints, gt.joints);
  CHECK(same.scale == Approx(1.0).epsilon(1e-12));
  CHECK((same.rotation - Mat3::Identity()).norm() < 1e-9);
  CHECK(same.translation.norm() < 1e-9);
}

TEST_CASE("procrustes handles reflections") {
  std::mt19937_64 rng(3);
  auto gt = random_pose(rng);
  Pose3D mirrored = gt;
  for (auto& j : mirrored.joints) j.x() = -j.x();
  auto fit = procrustes_fit(mirrored.joints, gt.joints);
  CHECK(fit.rotation.determinant() == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("procrustes optimality against random similarities") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> sc(0.5, 1.5);
  std::normal_distribution<double> g(0.0, 5.0);
  for (int t = 0; t < 5; ++t) {
    auto pred = random_pose(rng, 6), gt = random_pose(rng, 6);
    auto fit = procrustes_fit(pred.joints, gt.joints);
    const double best = similarity_residual(fit, pred.joints, gt.joints);
    for (int k = 0; k < 10000; ++k) {
      Similarity cand{sc(rng) * fit.scale, random_rotation(rng), Vec3(g(rng), g(rng), g(rng))};
      // Half the candidates are perturbations of the optimum, half arbitrary.
      if (k % 2 == 0) {
        cand.rotation = Eigen::AngleAxisd(0.05 * g(rng) / 5.0, Vec3(g(rng), g(rng), g(rng)).normalized()) *
                        fit.rotation;
        cand.translation = fit.translation + 0.1 * cand.translation;
      }
      CHECK(similarity_residual(cand, pred.joints, gt.joints) >= best - 1e-9);
    }
  }
}

TEST_CASE("pa_mpjpe properties") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> sc(0.3, 3.0);
  const auto joints = all_joints(16);
  for (int t = 0; t < 1000; ++t) {
    auto a = random_pose(rng), b = random_pose(rng);
    const double pa = pa_mpjpe(a, b, joints);
    CHECK(pa <= mpjpe(a, b, joints) + 1e-9);
    if (t % 10 == 0) {
      Pose3D moved = a;
      const Mat3 r = random_rotation(rng);
      const double s = sc(rng);
      for (auto& j : moved.joints) j = s * (r * j) + Vec3(3, -7, 11);
      CHECK(std::abs(pa_mpjpe(moved, b, joints) - pa) < 1e-6);
    }
  }
}

TEST_CASE("procrustes degenerate input") {
  Pose3D line, pt;
  for (int i = 0; i < 5; ++i) {
    line.joints.emplace_back(i, 2.0 * i, 0.0);
    pt.joints.emplace_back(1, 1, 1);
  }
  std::mt19937_64 rng(6);
  auto ok = random_pose(rng, 5);
  CHECK_THROWS_AS(procrustes_fit(line.joints, ok.joints), AlignmentError);
  CHECK_THROWS_AS(procrustes_fit(ok.joints, pt.joints), AlignmentError);
  std::vector<Vec3> two(ok.joints.begin(), ok.joints.begin() + 2);
  CHECK_THROWS_AS(procrustes_fit(two, two), AlignmentError);
}

TEST_CASE("report and cdf") {
  auto sk = Skeleton::unrealego16();
  std::mt19937_64 rng(7);
  std::vector<Pose3D> preds, gts;
  std::vector<int> cats;
  for (int i = 0; i < 8; ++i) {
    gts.push_back(random_pose(rng));
    auto p = gts.back();
    for (auto& j : p.joints) j += Vec3(0, 0, 1.0 + i % 2);  // 10 mm or 20 mm
    preds.push_back(p);
    cats.push_back(i % 2);
  }
  auto rep = summarize_errors(sk, preds, gts, cats, {"even", "odd"});
  CHECK(rep.count == 8);
  CHECK(rep.mpjpe_mm == Approx(15.0));
  CHECK(rep.per_category[0].mpjpe_mm == Approx(10.0));
  CHECK(rep.per_category[1].mpjpe_mm == Approx(20.0));
  CHECK(rep.joint_names.size() == 15);
  for (const auto& r : rep.per_category) CHECK(r.pa_mpjpe_mm <= r.mpjpe_mm + 1e-9);
  CHECK(rep.pa_mpjpe_mm < 1e-6);

  auto cdf = error_cdf(rep, 50.0, 5.0);
  // Left and right joints pool into one group.
  CHECK(std::find(cdf.groups.begin(), cdf.groups.end(), "hand") != cdf.groups.end());
  CHECK(std::find(cdf.groups.begin(), cdf.groups.end(), "hand_l") == cdf.groups.end());
  for (const auto& row : cdf.fraction) {
    for (size_t k = 1; k < row.size(); ++k) CHECK(row[k] >= row[k - 1]);
    CHECK(row.back() == 1.0);
  }

  const auto dir = std::filesystem::temp_directory_path() / "ego3d_test_report";
  std::filesystem::create_directories(dir);
  write_report_csv(rep, dir / "r.csv");
  std::ifstream in(dir / "r.csv");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "category,count,mpjpe_mm,pa_mpjpe_mm");
  CHECK(first.rfind("overall,8,", 0) == 0);
}
