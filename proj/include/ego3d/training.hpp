#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ego3d/dataset_io.hpp"
#include "ego3d/losses.hpp"
#include "ego3d/model.hpp"

namespace ego3d {

/// A dataset stacked into tensors (float32, CPU).
struct TensorDataset {
  torch::Tensor images;         // [N, 2, 3, S, S]
  torch::Tensor jh;             // [N, 2J, h, h]
  torch::Tensor peh;            // [N, 4L, h, h]
  torch::Tensor local_pose;     // [N, joints, 3] cm
  torch::Tensor orientations;   // [N, L, 3]
  torch::Tensor pixel_lengths;  // [N, L]
  std::vector<int> categories;

  int64_t size() const { return images.defined() ? images.size(0) : 0; }
  static TensorDataset from(const Dataset& dataset);
  /// Rows `index` of every tensor.
  TensorDataset subset(const torch::Tensor& index) const;
};

struct TrainConfig {
  int stage = 1;
  double epochs = 10.0;
  double decay_start = 5.0;  // lr is constant until here, then falls linearly to 0 at `epochs`
  int batch_size = 16;
  std::string optimizer = "adam";  // adam | sgd
  double lr = 1e-3;
  double momentum = 0.9;
  uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs between checkpoints; 0 keeps only the final one
  int64_t max_steps = -1;    // < 0: no cap
  bool deterministic = true;
  bool shuffle = true;
  LossWeights weights;

  static TrainConfig stage1_default();
  static TrainConfig stage2_default();
  /// 100-epoch schedule used for the long-run preset.
  static TrainConfig long_run(int stage);

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc, const TrainConfig& base);
};

/// Learning rate at a (fractional) epoch.
double lr_at(double epoch, const TrainConfig& cfg);

struct StepRecord {
  int64_t step = 0;
  int stage = 1;
  std::vector<std::pair<std::string, double>> losses;
  double lr = 0.0;
  nlohmann::json to_json() const;
};

struct TrainResult {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_loss;  // mean total loss per epoch
  int64_t steps_taken = 0;
  std::filesystem::path checkpoint;
};

struct TrainOutputs {
  std::filesystem::path log_path;        // JSONL, one record per step; empty disables
  std::filesystem::path checkpoint_dir;  // empty disables checkpoint files
  std::function<void(const StepRecord&)> on_step;
};

/// Estimated heatmaps of the frozen extractors (eval mode, no gradient).
struct EstimatedHeatmaps {
  torch::Tensor jh, peh;
};
EstimatedHeatmaps estimate_heatmaps(NetBundle& bundle, const torch::Tensor& images, int batch_size = 32);

/// Trains both extractors jointly on L_2D. Nothing else changes.
TrainResult train_stage1(NetBundle& bundle, const TensorDataset& data, const TrainConfig& cfg,
                         const TrainOutputs& outputs = {});

/// Trains encoder, stereo matcher, decoder and reconstructor on L_3D from the
/// frozen extractors' estimates. `estimated` may be supplied to skip
/// recomputing them. The decoder's mean pose is set from `data` first.
TrainResult train_stage2(NetBundle& bundle, const TensorDataset& data, const TrainConfig& cfg,
                         const TrainOutputs& outputs = {},
                         const std::optional<EstimatedHeatmaps>& estimated = std::nullopt);

/// Loads the extractor weights of a stage-1 checkpoint; throws ConfigError when
/// the file is missing or is not a stage-1 (or later) checkpoint.
void load_stage1(NetBundle& bundle, const std::filesystem::path& checkpoint);

/// Names of the parameters optimized by a stage.
std::vector<std::string> stage_parameter_names(NetBundle& bundle, int stage);

/// Stage-2 losses for one batch, with their graphs.
struct Stage2Losses {
  torch::Tensor trans, pose, recon, cos, total;
  int64_t cos_skipped = 0;
};
Stage2Losses stage2_losses(NetBundle& bundle, const torch::Tensor& est_jh, const torch::Tensor& est_peh,
                           const torch::Tensor& gt_pose, const torch::Tensor& gt_orientations,
                           const LossWeights& weights);

/// Gradient norm reaching the stereo matcher's parameters from each stage-2
/// loss in isolation.
std::vector<std::pair<std::string, double>> stereo_matcher_gradient_probe(
    NetBundle& bundle, const torch::Tensor& est_jh, const torch::Tensor& est_peh, const torch::Tensor& gt_pose,
    const torch::Tensor& gt_orientations, const LossWeights& weights);

/// Seeds torch and (optionally) pins torch to one thread.
void seed_everything(uint64_t seed, bool deterministic);

}  // namespace ego3d
