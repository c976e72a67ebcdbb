#include "ego3d/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ego3d/checkpoint.hpp"
#include "ego3d/errors.hpp"
#include "ego3d/plots.hpp"

namespace ego3d {

namespace {

void set_eval(NetBundle& bundle) { bundle->eval(); }

}  // namespace

torch::Tensor predict_from_heatmaps(NetBundle& bundle, const EstimatedHeatmaps& est, int batch_size) {
  torch::NoGradGuard no_grad;
  set_eval(bundle);
  const auto& cfg = bundle->config;
  std::vector<torch::Tensor> out;
  for (int64_t i = 0; i < est.jh.size(0); i += batch_size) {
    const int64_t n = std::min<int64_t>(batch_size, est.jh.size(0) - i);
    auto jh = est.jh.narrow(0, i, n);
    torch::Tensor peh = cfg.uses_peh() ? est.peh.narrow(0, i, n) : torch::Tensor();
    out.push_back(bundle->reconstruct(jh, peh).pose);
  }
  return torch::cat(out, 0);
}

torch::Tensor predict(NetBundle& bundle, const torch::Tensor& images, int batch_size) {
  return predict_from_heatmaps(bundle, estimate_heatmaps(bundle, images, batch_size), batch_size);
}

std::vector<Pose3D> to_poses(const torch::Tensor& poses) {
  auto p = poses.to(torch::kFloat64).contiguous();
  auto acc = p.accessor<double, 3>();
  std::vector<Pose3D> out(p.size(0));
  for (int64_t i = 0; i < p.size(0); ++i) {
    out[i].frame = Frame::local;
    for (int64_t j = 0; j < p.size(1); ++j) out[i].joints.emplace_back(acc[i][j][0], acc[i][j][1], acc[i][j][2]);
  }
  return out;
}

std::string config_hash(const ModelConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(config.to_json().dump())));
  return buf;
}

EvalReport evaluate(NetBundle& bundle, const TensorDataset& data, const Skeleton& skeleton,
                    const std::vector<std::string>& category_names, const std::optional<EstimatedHeatmaps>& estimated) {
  if (data.local_pose.size(1) != skeleton.num_joints()) {
    throw DimensionError("evaluate: dataset joint count does not match the skeleton");
  }
  auto pred = estimated ? predict_from_heatmaps(bundle, *estimated) : predict(bundle, data.images);
  auto names = category_names;
  if (names.empty()) {
    int top = -1;
    for (int c : data.categories) top = std::max(top, c);
    for (int c = 0; c <= top; ++c) names.push_back("category" + std::to_string(c));
  }
  auto report = summarize_errors(skeleton, to_poses(pred), to_poses(data.local_pose), data.categories, names);
  report.config_hash = config_hash(bundle->config);
  return report;
}

double orientation_error_deg(NetBundle& bundle, const EstimatedHeatmaps& est, const torch::Tensor& gt_orientations) {
  if (!bundle->stereo_matcher) throw ConfigError("orientation error: the variant has no stereo matcher");
  torch::NoGradGuard no_grad;
  set_eval(bundle);
  auto pred = bundle->stereo_matcher(bundle->matcher_input(est.jh, est.peh));
  auto unit = pred / pred.norm(2, 2, true).clamp_min(1e-12);
  auto cos = (unit * gt_orientations).sum(2).clamp(-1.0, 1.0);
  return torch::acos(cos).mean().item<double>() * 180.0 / std::numbers::pi;
}

const std::vector<ReferenceRow>& reference_ablation() {
  static const std::vector<ReferenceRow> rows = {{Variant::baseline, 79.08, 59.26},
                                                 {Variant::with_peh, 75.82, 58.52},
                                                 {Variant::with_sm, 66.72, 52.29},
                                                 {Variant::full, 60.82, 48.47}};
  return rows;
}

const AblationRow* AblationResult::row(Variant v) const {
  for (const auto& r : rows) {
    if (r.variant == v) return &r;
  }
  return nullptr;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  s = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
  return {m, s};
}

const ReferenceRow* reference_for(Variant v) {
  for (const auto& r : reference_ablation()) {
    if (r.variant == v) return &r;
  }
  return nullptr;
}

}  // namespace

std::vector<std::string> ordering_violations(const std::vector<AblationRow>& rows) {
  auto find = [&](Variant v) -> const AblationRow* {
    for (const auto& r : rows) {
      if (r.variant == v) return &r;
    }
    return nullptr;
  };
  std::vector<std::string> out;
  auto check = [&](Variant lo, Variant hi) {
    const auto* a = find(lo);
    const auto* b = find(hi);
    if (!a || !b) return;
    if (!(a->mean_mpjpe <= b->mean_mpjpe)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s <= %s violated (%.2f mm > %.2f mm)", to_string(lo).c_str(),
                    to_string(hi).c_str(), a->mean_mpjpe, b->mean_mpjpe);
      out.emplace_back(buf);
    }
  };
  check(Variant::full, Variant::with_sm);
  check(Variant::with_sm, Variant::baseline);
  check(Variant::with_peh, Variant::baseline);
  return out;
}

AblationResult ablation_run(const TensorDataset& train, const TensorDataset& test, const Skeleton& skeleton,
                            const AblationSpec& spec, const std::function<void(const std::string&)>& progress) {
  if (spec.seeds.empty()) throw ConfigError("ablation: no seeds");
  if (spec.variants.empty()) throw ConfigError("ablation: no variants");
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  AblationResult result;
  result.seeds = spec.seeds;
  for (Variant v : spec.variants) result.rows.push_back({v});

  for (uint64_t seed : spec.seeds) {
    ModelConfig base = spec.model;
    base.variant = Variant::full;
    seed_everything(seed, spec.stage1.deterministic);
    NetBundle extractor_net(base);
    TrainConfig s1 = spec.stage1;
    s1.seed = seed;
    auto r1 = train_stage1(extractor_net, train, s1);
    say("seed " + std::to_string(seed) + " stage 1: final L_2D " +
        std::to_string(r1.epoch_loss.empty() ? 0.0 : r1.epoch_loss.back()));
    auto extractors = snapshot(extractor_net, 1);
    auto est_train = estimate_heatmaps(extractor_net, train.images);
    auto est_test = estimate_heatmaps(extractor_net, test.images);

    for (auto& row : result.rows) {
      ModelConfig cfg = spec.model;
      cfg.variant = row.variant;
      seed_everything(seed, spec.stage2.deterministic);
      NetBundle net(cfg);
      load_state(net, extractors, {"jh_extractor.", "peh_extractor."});
      TrainConfig s2 = spec.stage2;
      s2.seed = seed;
      train_stage2(net, train, s2, {}, est_train);
      auto report = evaluate(net, test, skeleton, {}, est_test);
      row.mpjpe_mm.push_back(report.mpjpe_mm);
      row.pa_mpjpe_mm.push_back(report.pa_mpjpe_mm);
      char buf[200];
      int n = std::snprintf(buf, sizeof(buf), "seed %llu %s: MPJPE %.2f mm, PA-MPJPE %.2f mm",
                            static_cast<unsigned long long>(seed), to_string(row.variant).c_str(), report.mpjpe_mm,
                            report.pa_mpjpe_mm);
      if (net->config.uses_sm()) {
        row.orientation_deg.push_back(orientation_error_deg(net, est_test, test.orientations));
        std::snprintf(buf + n, sizeof(buf) - n, ", limb orientation %.1f deg", row.orientation_deg.back());
      }
      say(buf);
    }
  }
  for (auto& row : result.rows) {
    std::tie(row.mean_mpjpe, row.std_mpjpe) = mean_std(row.mpjpe_mm);
    std::tie(row.mean_pa, row.std_pa) = mean_std(row.pa_mpjpe_mm);
  }
  result.violations = ordering_violations(result.rows);
  return result;
}

void write_ablation_csv(const AblationResult& result, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "variant,seeds,mpjpe_mean_mm,mpjpe_std_mm,pa_mpjpe_mean_mm,pa_mpjpe_std_mm,reference_mpjpe_mm,"
         "reference_pa_mpjpe_mm,per_seed_mpjpe_mm\n";
  out.precision(6);
  out << std::fixed;
  for (const auto& r : result.rows) {
    const auto* ref = reference_for(r.variant);
    std::string per;
    for (double v : r.mpjpe_mm) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", v);
      per += (per.empty() ? "" : ";") + std::string(buf);
    }
    out << to_string(r.variant) << ',' << r.mpjpe_mm.size() << ',' << r.mean_mpjpe << ',' << r.std_mpjpe << ','
        << r.mean_pa << ',' << r.std_pa << ',' << (ref ? ref->mpjpe_mm : 0.0) << ',' << (ref ? ref->pa_mpjpe_mm : 0.0)
        << ',' << per << '\n';
  }
}

void write_ablation_plot(const AblationResult& result, const std::filesystem::path& path) {
  std::vector<std::string> labels;
  std::vector<double> values, errors;
  for (const auto& r : result.rows) {
    labels.push_back(to_string(r.variant));
    values.push_back(r.mean_mpjpe);
    errors.push_back(r.std_mpjpe);
  }
  write_svg_bars(path, "Ablation: test MPJPE (mean over seeds)", "MPJPE (mm)", labels, values, errors);
}

std::string format_ablation(const AblationResult& result) {
  std::ostringstream s;
  const auto* base = result.row(Variant::baseline);
  const auto* ref_base = reference_for(Variant::baseline);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-8s %14s %14s %12s %12s\n", "variant", "MPJPE mm", "PA-MPJPE mm", "vs B", "ref vs B");
  s << buf;
  for (const auto& r : result.rows) {
    const auto* ref = reference_for(r.variant);
    const double delta = base && base->mean_mpjpe > 0 ? 100.0 * (r.mean_mpjpe / base->mean_mpjpe - 1.0) : 0.0;
    const double ref_delta = ref && ref_base ? 100.0 * (ref->mpjpe_mm / ref_base->mpjpe_mm - 1.0) : 0.0;
    std::snprintf(buf, sizeof(buf), "%-8s %7.2f ±%5.2f %7.2f ±%5.2f %+11.1f%% %+11.1f%%\n", to_string(r.variant).c_str(),
                  r.mean_mpjpe, r.std_mpjpe, r.mean_pa, r.std_pa, delta, ref_delta);
    s << buf;
  }
  if (result.violations.empty()) {
    s << "ordering: all expected orderings hold\n";
  } else {
    for (const auto& v : result.violations) s << "ordering violation: " << v << '\n';
  }
  return s.str();
}

}  // namespace ego3d
