#include "ego3d/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <Eigen/Dense>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace {

void check_pair(const Pose3D& pred, const Pose3D& gt, std::span<const int> joints) {
  if (pred.size() != gt.size()) {
    throw DimensionError("pose pair has mismatched joint counts (" + std::to_string(pred.size()) + " vs " +
                         std::to_string(gt.size()) + ")");
  }
  if (joints.empty()) throw DimensionError("empty joint set");
  for (int j : joints) {
    if (j < 0 || j >= pred.size()) throw IndexError("joint id " + std::to_string(j) + " out of range");
  }
}

std::vector<Vec3> gather(const Pose3D& pose, std::span<const int> joints) {
  std::vector<Vec3> out;
  out.reserve(joints.size());
  for (int j : joints) out.push_back(pose.joints[j]);
  return out;
}

// Rank check on a centered point set: needs two independent directions.
void check_spread(std::span<const Vec3> pts, const Vec3& mean, const char* which) {
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) scatter += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
  const Vec3 ev = eig.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
    throw AlignmentError(std::string("procrustes: ") + which + " joints are coincident or collinear");
  }
}

}  // namespace

double mpjpe(const Pose3D& pred, const Pose3D& gt, std::span<const int> joints) {
  check_pair(pred, gt, joints);
  double sum = 0.0;
  for (int j : joints) sum += (pred.joints[j] - gt.joints[j]).norm();
  return sum / static_cast<double>(joints.size());
}

Similarity procrustes_fit(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  if (pred.size() != gt.size() || pred.size() < 3) {
    throw AlignmentError("procrustes: need at least 3 corresponding points");
  }
  const double n = static_cast<double>(pred.size());
  Vec3 mu_x = Vec3::Zero(), mu_y = Vec3::Zero();
  for (size_t i = 0; i < pred.size(); ++i) {
    mu_x += pred[i];
    mu_y += gt[i];
  }
  mu_x /= n;
  mu_y /= n;
  check_spread(pred, mu_x, "predicted");
  check_spread(gt, mu_y, "ground-truth");

  Mat3 cross = Mat3::Zero();
  double var_x = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const Vec3 x = pred[i] - mu_x;
    cross += (gt[i] - mu_y) * x.transpose();
    var_x += x.squaredNorm();
  }
  Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 d = Vec3::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d[2] = -1.0;
  Similarity out;
  out.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  out.scale = svd.singularValues().dot(d) / var_x;
  out.translation = mu_y - out.scale * (out.rotation * mu_x);
  return out;
}

std::vector<Vec3> procrustes_align(const Pose3D& pred, const Pose3D& gt, std::span<const int> joints) {
  check_pair(pred, gt, joints);
  const auto x = gather(pred, joints);
  const auto y = gather(gt, joints);
  const Similarity t = procrustes_fit(x, y);
  std::vector<Vec3> out;
  out.reserve(x.size());
  for (const auto& p : x) out.push_back(t.apply(p));
  return out;
}

double pa_mpjpe(const Pose3D& pred, const Pose3D& gt, std::span<const int> joints) {
  const auto aligned = procrustes_align(pred, gt, joints);
  double sum = 0.0;
  for (size_t i = 0; i < joints.size(); ++i) sum += (aligned[i] - gt.joints[joints[i]]).norm();
  return sum / static_cast<double>(joints.size());
}

double similarity_residual(const Similarity& t, std::span<const Vec3> pred, std::span<const Vec3> gt) {
  double sum = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) sum += (t.apply(pred[i]) - gt[i]).squaredNorm();
  return sum;
}

EvalReport summarize_errors(const Skeleton& skeleton, const std::vector<Pose3D>& preds,
                            const std::vector<Pose3D>& gts, const std::vector<int>& categories,
                            const std::vector<std::string>& category_names) {
  if (preds.size() != gts.size() || preds.size() != categories.size()) {
    throw DimensionError("summarize_errors: predictions, ground truth and categories differ in count");
  }
  const auto& joints = skeleton.estimated_joints();
  EvalReport rep;
  rep.count = preds.size();
  for (int j : joints) rep.joint_names.push_back(skeleton.joint_names()[j]);
  rep.per_joint_error.assign(joints.size(), {});

  std::vector<double> sum_m(category_names.size(), 0.0), sum_pa(category_names.size(), 0.0);
  std::vector<size_t> cnt(category_names.size(), 0);
  double total_m = 0.0, total_pa = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double m = 10.0 * mpjpe(preds[i], gts[i], joints);
    const double pa = 10.0 * pa_mpjpe(preds[i], gts[i], joints);
    total_m += m;
    total_pa += pa;
    const int c = categories[i];
    if (c < 0 || c >= static_cast<int>(category_names.size())) throw IndexError("category id out of range");
    sum_m[c] += m;
    sum_pa[c] += pa;
    ++cnt[c];
    for (size_t k = 0; k < joints.size(); ++k) {
      rep.per_joint_error[k].push_back(10.0 * (preds[i].joints[joints[k]] - gts[i].joints[joints[k]]).norm());
    }
  }
  if (rep.count > 0) {
    rep.mpjpe_mm = total_m / static_cast<double>(rep.count);
    rep.pa_mpjpe_mm = total_pa / static_cast<double>(rep.count);
  }
  for (size_t c = 0; c < category_names.size(); ++c) {
    CategoryRow row{category_names[c], cnt[c], 0.0, 0.0};
    if (cnt[c] > 0) {
      row.mpjpe_mm = sum_m[c] / static_cast<double>(cnt[c]);
      row.pa_mpjpe_mm = sum_pa[c] / static_cast<double>(cnt[c]);
    }
    rep.per_category.push_back(row);
  }
  return rep;
}

CdfTable error_cdf(const EvalReport& report, double max_mm, double step_mm) {
  if (!(step_mm > 0.0) || !(max_mm > 0.0)) throw ParameterError("error_cdf: bad threshold grid");
  std::map<std::string, std::vector<double>> pooled;
  std::vector<std::string> order;
  for (size_t k = 0; k < report.joint_names.size(); ++k) {
    std::string g = report.joint_names[k];
    if (g.size() > 2 && (g.ends_with("_l") || g.ends_with("_r"))) g.resize(g.size() - 2);
    if (!pooled.contains(g)) order.push_back(g);
    auto& v = pooled[g];
    v.insert(v.end(), report.per_joint_error[k].begin(), report.per_joint_error[k].end());
  }
  CdfTable t;
  t.groups = order;
  for (double x = 0.0; x <= max_mm + 1e-9; x += step_mm) t.thresholds_mm.push_back(x);
  for (const auto& g : order) {
    auto v = pooled[g];
    std::sort(v.begin(), v.end());
    std::vector<double> row;
    for (double x : t.thresholds_mm) {
      const auto below = std::upper_bound(v.begin(), v.end(), x) - v.begin();
      row.push_back(v.empty() ? 0.0 : static_cast<double>(below) / static_cast<double>(v.size()));
    }
    t.fraction.push_back(std::move(row));
  }
  return t;
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "category,count,mpjpe_mm,pa_mpjpe_mm\n";
  out << "overall," << report.count << ',' << report.mpjpe_mm << ',' << report.pa_mpjpe_mm << '\n';
  for (const auto& r : report.per_category) {
    out << r.name << ',' << r.count << ',' << r.mpjpe_mm << ',' << r.pa_mpjpe_mm << '\n';
  }
  if (!out) throw FormatError("cannot write " + path.string());
}

void write_cdf_csv(const CdfTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  out << "group,threshold_mm,fraction\n";
  for (size_t g = 0; g < table.groups.size(); ++g) {
    for (size_t i = 0; i < table.thresholds_mm.size(); ++i) {
      out << table.groups[g] << ',' << table.thresholds_mm[i] << ',' << table.fraction[g][i] << '\n';
    }
  }
  if (!out) throw FormatError("cannot write " + path.string());
}

}  // namespace ego3d
