#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ego3d/geometry.hpp"
#include "ego3d/skeleton.hpp"

namespace ego3d {

/// Mean over `joints` of the per-joint Euclidean distance.
double mpjpe(const Pose3D& pred, const Pose3D& gt, std::span<const int> joints);

/// s * R * p + t
struct Similarity {
  double scale = 1.0;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
};

/// Least-squares similarity taking `pred` onto `gt` (centering, SVD of the
/// cross-covariance, reflection correction). Throws AlignmentError when either
/// point set is coincident or collinear.
Similarity procrustes_fit(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// `pred` restricted to `joints`, aligned onto `gt` restricted to `joints`.
std::vector<Vec3> procrustes_align(const Pose3D& pred, const Pose3D& gt, std::span<const int> joints);

double pa_mpjpe(const Pose3D& pred, const Pose3D& gt, std::span<const int> joints);

/// Sum of squared distances between `pred` mapped by `t` and `gt`.
double similarity_residual(const Similarity& t, std::span<const Vec3> pred, std::span<const Vec3> gt);

struct CategoryRow {
  std::string name;
  size_t count = 0;
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;
};

/// Errors are reported in millimeters; poses are centimeters internally.
/// MPJPE is the mean over samples of the per-sample mean joint error.
struct EvalReport {
  double mpjpe_mm = 0.0;
  double pa_mpjpe_mm = 0.0;
  std::vector<CategoryRow> per_category;
  std::vector<std::string> joint_names;             // estimated joints, in order
  std::vector<std::vector<double>> per_joint_error;  // [joint][sample], mm
  size_t count = 0;
  std::string config_hash;
};

EvalReport summarize_errors(const Skeleton& skeleton, const std::vector<Pose3D>& preds,
                            const std::vector<Pose3D>& gts, const std::vector<int>& categories,
                            const std::vector<std::string>& category_names);

struct CdfTable {
  std::vector<std::string> groups;  // left/right joints merged, e.g. "hand"
  std::vector<double> thresholds_mm;
  std::vector<std::vector<double>> fraction;  // [group][threshold]
};

/// Empirical CDF of per-joint errors, left and right joints pooled per group.
CdfTable error_cdf(const EvalReport& report, double max_mm = 500.0, double step_mm = 5.0);

/// Columns: category,count,mpjpe_mm,pa_mpjpe_mm (first row is "overall").
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
/// Columns: group,threshold_mm,fraction
void write_cdf_csv(const CdfTable& table, const std::filesystem::path& path);

}  // namespace ego3d
