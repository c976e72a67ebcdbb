#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "ego3d/model.hpp"

namespace ego3d {

inline constexpr const char* kCheckpointFormat = "ego3d-checkpoint/1";

/// File layout:
///   8 bytes   "EGO3DCKP"
///   u32 LE    version (1)
///   u64 LE    header length
///   header    JSON {format, config, stage, meta, tensors: [{name, shape, dtype}]}
///   payload   tensor data in header order, little-endian (float32 | float64 | int64)
struct CheckpointData {
  ModelConfig config;
  int stage = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, torch::Tensor>> tensors;  // parameters and buffers
};

void save_checkpoint(const std::filesystem::path& path, NetBundle& bundle, int stage,
                     const nlohmann::json& meta = nlohmann::json::object());
/// Throws FormatError on a malformed file, ConfigError if it does not exist.
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Copies tensors whose names start with one of `prefixes` (all when empty)
/// into `bundle`. Every selected bundle tensor must be present with a matching
/// shape. Returns the number of tensors copied.
size_t load_state(NetBundle& bundle, const CheckpointData& data, const std::vector<std::string>& prefixes = {});

/// In-memory copy of the bundle's tensors.
CheckpointData snapshot(NetBundle& bundle, int stage);

/// Builds a bundle from the stored config and loads every tensor.
NetBundle load_bundle(const std::filesystem::path& path);

/// All named parameters and buffers of a module.
std::vector<std::pair<std::string, torch::Tensor>> named_state(torch::nn::Module& module);

/// FNV-1a over the raw bytes of the tensors, in order.
uint64_t tensor_hash(const std::vector<torch::Tensor>& tensors);
uint64_t fnv1a(const std::string& bytes, uint64_t seed = 1469598103934665603ULL);

}  // namespace ego3d
