#include "ego3d/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "dataset files are little-endian float32; add byte swapping for this platform");

int64_t FloatTensor::numel_of(const std::vector<int64_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), int64_t{1}, std::multiplies<>());
}

const FloatTensor& SampleRecord::get(const std::string& name) const {
  for (const auto& [key, t] : fields) {
    if (key == name) return t;
  }
  throw FormatError("sample record has no field '" + name + "'");
}

namespace {

FloatTensor stack_heatmaps(const std::vector<Heatmap>& maps) {
  FloatTensor t;
  const int h = maps.empty() ? 0 : maps[0].height;
  const int w = maps.empty() ? 0 : maps[0].width;
  t.shape = {static_cast<int64_t>(maps.size()), h, w};
  t.data.reserve(maps.size() * h * w);
  for (const auto& m : maps) {
    for (double v : m.values) t.data.push_back(static_cast<float>(v));
  }
  return t;
}

}  // namespace

SampleRecord to_record(const Sample& s) {
  SampleRecord r;
  r.category = s.category;
  const int size = s.images[0].width;
  FloatTensor images;
  images.shape = {2, 3, size, size};
  images.data.resize(static_cast<size_t>(2) * 3 * size * size);
  for (int v = 0; v < 2; ++v) {
    for (int ch = 0; ch < 3; ++ch) {
      for (int row = 0; row < size; ++row) {
        for (int col = 0; col < size; ++col) {
          images.data[((static_cast<size_t>(v) * 3 + ch) * size + row) * size + col] = s.images[v].at(row, col, ch);
        }
      }
    }
  }
  r.fields.emplace_back("images", std::move(images));
  r.fields.emplace_back("jh", stack_heatmaps(s.jh));
  r.fields.emplace_back("peh", stack_heatmaps(s.peh));

  FloatTensor pose{{s.local_pose.size(), 3}, {}};
  for (const auto& p : s.local_pose.joints) {
    for (int k = 0; k < 3; ++k) pose.data.push_back(static_cast<float>(p[k]));
  }
  r.fields.emplace_back("local_pose", std::move(pose));
  r.fields.emplace_back("pelvis_cam", FloatTensor{{3},
                                                  {static_cast<float>(s.pelvis_cam.x()),
                                                   static_cast<float>(s.pelvis_cam.y()),
                                                   static_cast<float>(s.pelvis_cam.z())}});
  const int64_t n_limbs = static_cast<int64_t>(s.orientations.size());
  FloatTensor orient{{n_limbs, 3}, {}};
  FloatTensor angles{{n_limbs}, {}};
  FloatTensor lengths{{n_limbs}, {}};
  for (int64_t l = 0; l < n_limbs; ++l) {
    for (int k = 0; k < 3; ++k) orient.data.push_back(static_cast<float>(s.orientations[l].o[k]));
    angles.data.push_back(static_cast<float>(s.angles[l].theta));
    lengths.data.push_back(static_cast<float>(s.pixel_lengths[l]));
  }
  r.fields.emplace_back("orientations", std::move(orient));
  r.fields.emplace_back("angles", std::move(angles));
  r.fields.emplace_back("pixel_lengths", std::move(lengths));

  const int64_t n_est = static_cast<int64_t>(s.joint_pixels[0].size());
  FloatTensor pixels{{2, n_est, 2}, {}};
  FloatTensor visible{{2, n_est}, {}};
  for (int v = 0; v < 2; ++v) {
    for (int64_t k = 0; k < n_est; ++k) {
      pixels.data.push_back(static_cast<float>(s.joint_pixels[v][k].x()));
      pixels.data.push_back(static_cast<float>(s.joint_pixels[v][k].y()));
      visible.data.push_back(s.joint_visible[v][k] ? 1.0f : 0.0f);
    }
  }
  r.fields.emplace_back("joint_pixels", std::move(pixels));
  r.fields.emplace_back("joint_visible", std::move(visible));
  return r;
}

nlohmann::json sizes_to_json(const SampleSizes& sizes) {
  return {{"image_size", sizes.image_size}, {"heatmap_size", sizes.heatmap_size}, {"sigma", sizes.sigma}};
}

SampleSizes sizes_from_json(const nlohmann::json& doc) {
  SampleSizes s;
  try {
    s.image_size = doc.at("image_size").get<int>();
    s.heatmap_size = doc.at("heatmap_size").get<int>();
    s.sigma = doc.at("sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("sizes: ") + e.what());
  }
  return s;
}

DatasetWriter::DatasetWriter(fs::path dir, DatasetInfo info) : dir_(std::move(dir)), info_(std::move(info)) {
  fs::create_directories(dir_);
}

void DatasetWriter::append(const SampleRecord& record) {
  if (finished_) throw FormatError("dataset writer already finished");
  nlohmann::json layout = nlohmann::json::array();
  for (const auto& [name, t] : record.fields) {
    if (static_cast<int64_t>(t.data.size()) != FloatTensor::numel_of(t.shape)) {
      throw FormatError("field '" + name + "': data size does not match shape");
    }
    layout.push_back({{"name", name}, {"shape", t.shape}});
  }
  if (field_layout_.is_null()) {
    field_layout_ = layout;
  } else if (layout != field_layout_) {
    throw FormatError("record " + std::to_string(entries_.size()) + " has a different field layout");
  }
  char name[32];
  std::snprintf(name, sizeof(name), "sample_%06zu.f32", entries_.size());
  std::ofstream out(dir_ / name, std::ios::binary);
  for (const auto& [key, t] : record.fields) {
    out.write(reinterpret_cast<const char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw FormatError("cannot write " + (dir_ / name).string());
  entries_.push_back({{"file", name}, {"category", record.category}});
}

void DatasetWriter::finish() {
  if (finished_) return;
  finished_ = true;
  int64_t record_floats = 0;
  for (const auto& f : field_layout_) record_floats += FloatTensor::numel_of(f.at("shape").get<std::vector<int64_t>>());
  nlohmann::json manifest = {
      {"format", kDatasetFormat},
      {"split", info_.split},
      {"seed", info_.seed},
      {"count", entries_.size()},
      {"sizes", sizes_to_json(info_.sizes)},
      {"skeleton", info_.skeleton.to_json()},
      {"rig", info_.rig.to_json()},
      {"categories", info_.categories},
      {"dtype", "float32le"},
      {"record_bytes", record_floats * 4},
      {"fields", field_layout_.is_null() ? nlohmann::json::array() : field_layout_},
      {"samples", entries_}};
  std::ofstream out(dir_ / "manifest.json");
  out << manifest.dump(1) << "\n";
  if (!out) throw FormatError("cannot write manifest in " + dir_.string());
}

namespace {

const nlohmann::json& require(const nlohmann::json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw FormatError(std::string("manifest: missing field '") + key + "'");
  }
  return doc.at(key);
}

template <typename T>
T require_as(const nlohmann::json& doc, const char* key) {
  try {
    return require(doc, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("manifest: field '") + key + "' has the wrong type");
  }
}

}  // namespace

DatasetReader::DatasetReader(fs::path dir) : dir_(std::move(dir)) {
  std::ifstream in(dir_ / "manifest.json");
  if (!in) throw FormatError("manifest: cannot open " + (dir_ / "manifest.json").string());
  nlohmann::json m;
  try {
    in >> m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("manifest: not valid JSON: ") + e.what());
  }
  if (require_as<std::string>(m, "format") != kDatasetFormat) {
    throw FormatError("manifest: field 'format' is not " + std::string(kDatasetFormat));
  }
  if (require_as<std::string>(m, "dtype") != "float32le") throw FormatError("manifest: field 'dtype' unsupported");
  info_.split = require_as<std::string>(m, "split");
  info_.seed = require_as<uint64_t>(m, "seed");
  info_.sizes = sizes_from_json(require(m, "sizes"));
  info_.skeleton = Skeleton::from_json(require(m, "skeleton"));
  info_.rig = FisheyeStereoRig::from_json(require(m, "rig"));
  info_.categories = require_as<std::vector<std::string>>(m, "categories");
  for (const auto& f : require(m, "fields")) {
    layout_.emplace_back(require_as<std::string>(f, "name"), require_as<std::vector<int64_t>>(f, "shape"));
  }
  const auto count = require_as<size_t>(m, "count");
  const auto& samples = require(m, "samples");
  if (!samples.is_array() || samples.size() != count) {
    throw FormatError("manifest: field 'samples' does not list 'count' entries");
  }
  for (const auto& s : samples) {
    files_.push_back(require_as<std::string>(s, "file"));
    categories_.push_back(require_as<int>(s, "category"));
  }
}

SampleRecord DatasetReader::read(size_t index) const {
  if (index >= files_.size()) throw IndexError("dataset index out of range");
  const fs::path path = dir_ / files_[index];
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("sample file missing: " + path.string());
  SampleRecord r;
  r.category = categories_[index];
  for (const auto& [name, shape] : layout_) {
    FloatTensor t;
    t.shape = shape;
    t.data.resize(static_cast<size_t>(FloatTensor::numel_of(shape)));
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(t.data.size() * sizeof(float))) {
      throw FormatError(path.string() + ": truncated while reading field '" + name + "'");
    }
    r.fields.emplace_back(name, std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError(path.string() + ": trailing bytes after the last field");
  }
  return r;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  DatasetWriter writer(dir, dataset.info);
  for (const auto& r : dataset.records) writer.append(r);
  writer.finish();
}

Dataset read_dataset(const fs::path& dir) {
  DatasetReader reader(dir);
  Dataset d;
  d.info = reader.info();
  d.records.reserve(reader.size());
  for (size_t i = 0; i < reader.size(); ++i) d.records.push_back(reader.read(i));
  return d;
}

Dataset generate_dataset(const PoseSampler& sampler, const SampleSizes& sizes, size_t count, uint64_t seed,
                         const std::string& split) {
  Dataset d;
  d.info.split = split;
  d.info.seed = seed;
  d.info.sizes = sizes;
  d.info.skeleton = sampler.skeleton;
  d.info.rig = sampler.rig;
  for (const auto& c : sampler.categories) d.info.categories.push_back(c.name);
  std::mt19937_64 rng(seed);
  d.records.reserve(count);
  for (size_t i = 0; i < count; ++i) d.records.push_back(to_record(make_sample(sampler, rng, sizes)));
  return d;
}

std::pair<std::vector<size_t>, std::vector<size_t>> deterministic_split(const std::vector<std::string>& keys,
                                                                        double train_fraction) {
  if (train_fraction < 0.0 || train_fraction > 1.0) throw ParameterError("split fraction must be in [0, 1]");
  std::vector<size_t> order(keys.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return keys[a] < keys[b]; });
  const auto n_train = static_cast<size_t>(train_fraction * static_cast<double>(keys.size()));
  return {std::vector<size_t>(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train)),
          std::vector<size_t>(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end())};
}

}  // namespace ego3d
