#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ego3d/metrics.hpp"
#include "ego3d/model.hpp"
#include "ego3d/training.hpp"

namespace ego3d {

/// Eval-mode pose predictions [N, joints, 3] in cm from images.
torch::Tensor predict(NetBundle& bundle, const torch::Tensor& images, int batch_size = 32);
/// Same, from already estimated heatmaps.
torch::Tensor predict_from_heatmaps(NetBundle& bundle, const EstimatedHeatmaps& est, int batch_size = 32);

std::vector<Pose3D> to_poses(const torch::Tensor& poses);

/// Scores predictions on the estimated joints. Errors in mm.
EvalReport evaluate(NetBundle& bundle, const TensorDataset& data, const Skeleton& skeleton,
                    const std::vector<std::string>& category_names,
                    const std::optional<EstimatedHeatmaps>& estimated = std::nullopt);

/// Hex FNV-1a of the model config JSON.
std::string config_hash(const ModelConfig& config);

/// Mean angle in degrees between the stereo matcher's orientations and the
/// ground truth, in eval mode.
double orientation_error_deg(NetBundle& bundle, const EstimatedHeatmaps& est, const torch::Tensor& gt_orientations);

/// Reference MPJPE / PA-MPJPE (mm) of the four variants at full scale on UnrealEgo.
struct ReferenceRow {
  Variant variant;
  double mpjpe_mm, pa_mpjpe_mm;
};
const std::vector<ReferenceRow>& reference_ablation();

struct AblationSpec {
  ModelConfig model;  // variant field is overridden per run
  TrainConfig stage1 = TrainConfig::stage1_default();
  TrainConfig stage2 = TrainConfig::stage2_default();
  std::vector<Variant> variants = {Variant::baseline, Variant::with_peh, Variant::with_sm, Variant::full};
  std::vector<uint64_t> seeds = {0, 1, 2};
};

struct AblationRow {
  Variant variant = Variant::baseline;
  std::vector<double> mpjpe_mm;  // per seed
  std::vector<double> pa_mpjpe_mm;
  std::vector<double> orientation_deg;  // per seed, stereo matcher variants only
  double mean_mpjpe = 0.0, std_mpjpe = 0.0;
  double mean_pa = 0.0, std_pa = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  std::vector<uint64_t> seeds;
  /// Expected orderings that do not hold, e.g. "B+PH+SM <= B+SM".
  std::vector<std::string> violations;
  const AblationRow* row(Variant v) const;
};

/// For each seed: one stage-1 run shared by all variants, then a stage-2 run
/// and a test evaluation per variant. `progress` receives one line per run.
AblationResult ablation_run(const TensorDataset& train, const TensorDataset& test, const Skeleton& skeleton,
                            const AblationSpec& spec, const std::function<void(const std::string&)>& progress = {});

/// Checks B+PH+SM <= B+SM <= B and B+PH <= B on the seed means.
std::vector<std::string> ordering_violations(const std::vector<AblationRow>& rows);

/// Columns: variant,seeds,mpjpe_mean_mm,mpjpe_std_mm,pa_mpjpe_mean_mm,pa_mpjpe_std_mm,
/// reference_mpjpe_mm,reference_pa_mpjpe_mm,per_seed_mpjpe_mm (semicolon separated)
void write_ablation_csv(const AblationResult& result, const std::filesystem::path& path);
/// Bar chart of mean MPJPE with std error bars.
void write_ablation_plot(const AblationResult& result, const std::filesystem::path& path);
/// Human-readable table with the reference deltas.
std::string format_ablation(const AblationResult& result);

}  // namespace ego3d
