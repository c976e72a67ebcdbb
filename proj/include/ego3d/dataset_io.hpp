#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ego3d/sample.hpp"

namespace ego3d {

/// Dense float32 tensor with a row-major shape.
struct FloatTensor {
  std::vector<int64_t> shape;
  std::vector<float> data;

  static int64_t numel_of(const std::vector<int64_t>& shape);
  bool operator==(const FloatTensor&) const = default;
};

/// Serialized form of a Sample: named float32 tensors in a fixed order.
///
/// Fields (shapes for J estimated joints, N skeleton joints, L embedding limbs,
/// image size S, heatmap size h):
///   images        [2, 3, S, S]   left/right RGB, channel-first
///   jh            [2J, h, h]
///   peh           [4L, h, h]
///   local_pose    [N, 3]         cm, pelvis-relative, left camera frame
///   pelvis_cam    [3]
///   orientations  [L, 3]
///   angles        [L]
///   pixel_lengths [L]
///   joint_pixels  [2, J, 2]
///   joint_visible [2, J]         1 or 0
struct SampleRecord {
  std::vector<std::pair<std::string, FloatTensor>> fields;
  int category = 0;

  const FloatTensor& get(const std::string& name) const;
  bool operator==(const SampleRecord&) const = default;
};

SampleRecord to_record(const Sample& sample);

struct DatasetInfo {
  std::string split = "train";
  uint64_t seed = 0;
  SampleSizes sizes;
  Skeleton skeleton;
  FisheyeStereoRig rig;
  std::vector<std::string> categories;
};

/// A directory holding manifest.json plus one raw little-endian float32 file per sample.
struct Dataset {
  DatasetInfo info;
  std::vector<SampleRecord> records;
};

inline constexpr const char* kDatasetFormat = "ego3d-dataset/1";

/// Writes records sequentially; finish() emits the manifest.
class DatasetWriter {
 public:
  DatasetWriter(std::filesystem::path dir, DatasetInfo info);
  void append(const SampleRecord& record);
  void finish();

 private:
  std::filesystem::path dir_;
  DatasetInfo info_;
  nlohmann::json field_layout_;
  nlohmann::json entries_ = nlohmann::json::array();
  bool finished_ = false;
};

/// Streams records in manifest order. Throws FormatError naming the offending field.
class DatasetReader {
 public:
  explicit DatasetReader(std::filesystem::path dir);
  const DatasetInfo& info() const { return info_; }
  size_t size() const { return files_.size(); }
  SampleRecord read(size_t index) const;

 private:
  std::filesystem::path dir_;
  DatasetInfo info_;
  std::vector<std::pair<std::string, std::vector<int64_t>>> layout_;
  std::vector<std::string> files_;
  std::vector<int> categories_;
};

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// Generates `count` samples with a generator seeded by `seed`.
Dataset generate_dataset(const PoseSampler& sampler, const SampleSizes& sizes, size_t count,
                         uint64_t seed, const std::string& split);

/// Deterministic split: sorts the keys and assigns the first `train_fraction`
/// of them to the training set. Returns indices into `keys`.
std::pair<std::vector<size_t>, std::vector<size_t>> deterministic_split(
    const std::vector<std::string>& keys, double train_fraction = 0.8);

nlohmann::json sizes_to_json(const SampleSizes& sizes);
SampleSizes sizes_from_json(const nlohmann::json& doc);

}  // namespace ego3d
