#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ego3d/model.hpp"
#include "ego3d/pose_sampler.hpp"
#include "ego3d/sample.hpp"
#include "ego3d/training.hpp"

namespace ego3d {

struct DataConfig {
  int train_count = 2000;
  int test_count = 200;
  SampleSizes sizes{64, 16, 1.0};  // 1 px Gaussians: the auto width is sub-pixel at 16x16
  double baseline_cm = 12.0;
  double fov_deg = 180.0;
  std::string skeleton = "unrealego16";  // built-in name or path to a skeleton JSON
};

/// One experiment: data, model, both training stages and the ablation grid.
///
/// JSON sections (all optional, unknown keys rejected):
///   output_dir, seed, deterministic,
///   data     {train_count, test_count, image_size, heatmap_size, sigma, baseline_cm, fov_deg, skeleton}
///   model    {preset: "toy" | "full", plus any ModelConfig field}
///   stage1, stage2  TrainConfig fields
///   ablation {variants: ["B", ...], seeds: [...]}
struct RunConfig {
  std::filesystem::path output_dir = "runs/default";
  uint64_t seed = 0;
  bool deterministic = true;
  DataConfig data;
  std::string model_preset = "toy";
  nlohmann::json model_overrides = nlohmann::json::object();
  TrainConfig stage1 = TrainConfig::stage1_default();
  TrainConfig stage2 = TrainConfig::stage2_default();
  std::vector<Variant> ablation_variants = {Variant::baseline, Variant::with_peh, Variant::with_sm, Variant::full};
  std::vector<uint64_t> ablation_seeds = {0, 1, 2};

  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Overrides from EGO3D_OUTPUT_DIR, EGO3D_SEED and EGO3D_DETERMINISTIC.
  void apply_env();

  Skeleton skeleton() const;
  FisheyeStereoRig rig() const;
  PoseSampler sampler() const;
  /// Preset plus overrides, sized to the skeleton and data resolution.
  ModelConfig model() const;

  uint64_t train_seed() const { return seed; }
  uint64_t test_seed() const { return seed + 1000003ULL; }

  std::filesystem::path dataset_dir(const std::string& split) const { return output_dir / "data" / split; }
  std::filesystem::path checkpoint_dir() const { return output_dir / "checkpoints"; }
  std::filesystem::path log_dir() const { return output_dir / "logs"; }
};

}  // namespace ego3d
