#include "ego3d/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace {

constexpr char kMagic[8] = {'E', 'G', 'O', '3', 'D', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kInt64: return "int64";
    default: throw FormatError("checkpoint: unsupported tensor dtype");
  }
}

torch::ScalarType dtype_from(const std::string& name) {
  if (name == "float32") return torch::kFloat32;
  if (name == "float64") return torch::kFloat64;
  if (name == "int64") return torch::kInt64;
  throw FormatError("checkpoint: unknown dtype '" + name + "'");
}

template <typename T>
void write_le(std::ofstream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw FormatError("checkpoint: truncated header");
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

std::vector<std::pair<std::string, torch::Tensor>> named_state(torch::nn::Module& module) {
  std::vector<std::pair<std::string, torch::Tensor>> out;
  for (const auto& p : module.named_parameters(true)) out.emplace_back(p.key(), p.value());
  for (const auto& b : module.named_buffers(true)) out.emplace_back(b.key(), b.value());
  return out;
}

void save_checkpoint(const std::filesystem::path& path, NetBundle& bundle, int stage, const nlohmann::json& meta) {
  auto state = named_state(*bundle);
  nlohmann::json header = {{"format", kCheckpointFormat},
                           {"config", bundle->config.to_json()},
                           {"stage", stage},
                           {"meta", meta},
                           {"tensors", nlohmann::json::array()}};
  std::vector<torch::Tensor> payload;
  for (auto& [name, t] : state) {
    auto c = t.detach().cpu().contiguous();
    header["tensors"].push_back({{"name", name}, {"shape", c.sizes().vec()}, {"dtype", dtype_name(c.scalar_type())}});
    payload.push_back(c);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("checkpoint: cannot write " + path.string());
    const std::string text = header.dump();
    out.write(kMagic, sizeof(kMagic));
    write_le<uint32_t>(out, kVersion);
    write_le<uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : payload) {
      out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
    }
    if (!out) throw ConfigError("checkpoint: write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw FormatError("checkpoint: bad magic in " + path.string());
  }
  const auto version = read_le<uint32_t>(in);
  if (version != kVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const auto len = read_le<uint64_t>(in);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError("checkpoint: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not JSON: ") + e.what());
  }
  if (header.value("format", "") != kCheckpointFormat) throw FormatError("checkpoint: unexpected format id");
  CheckpointData data;
  data.config = ModelConfig::from_json(header.at("config"));
  data.stage = header.at("stage").get<int>();
  data.meta = header.value("meta", nlohmann::json::object());
  for (const auto& entry : header.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(entry.at("dtype").get<std::string>())));
    if (!in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()))) {
      throw FormatError("checkpoint: truncated data for tensor '" + name + "'");
    }
    data.tensors.emplace_back(name, t);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("checkpoint: trailing bytes");
  return data;
}

size_t load_state(NetBundle& bundle, const CheckpointData& data, const std::vector<std::string>& prefixes) {
  auto selected = [&](const std::string& name) {
    if (prefixes.empty()) return true;
    for (const auto& p : prefixes) {
      if (name.rfind(p, 0) == 0) return true;
    }
    return false;
  };
  std::map<std::string, const torch::Tensor*> stored;
  for (const auto& [name, t] : data.tensors) stored[name] = &t;
  size_t copied = 0;
  torch::NoGradGuard no_grad;
  for (auto& [name, t] : named_state(*bundle)) {
    if (!selected(name)) continue;
    auto it = stored.find(name);
    if (it == stored.end()) throw FormatError("checkpoint: missing tensor '" + name + "'");
    if (!it->second->sizes().equals(t.sizes())) throw FormatError("checkpoint: shape mismatch for '" + name + "'");
    t.copy_(*it->second);
    ++copied;
  }
  return copied;
}

CheckpointData snapshot(NetBundle& bundle, int stage) {
  CheckpointData data;
  data.config = bundle->config;
  data.stage = stage;
  for (auto& [name, t] : named_state(*bundle)) data.tensors.emplace_back(name, t.detach().clone());
  return data;
}

NetBundle load_bundle(const std::filesystem::path& path) {
  auto data = read_checkpoint(path);
  NetBundle bundle(data.config);
  load_state(bundle, data);
  return bundle;
}

uint64_t fnv1a(const std::string& bytes, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

uint64_t tensor_hash(const std::vector<torch::Tensor>& tensors) {
  uint64_t h = 1469598103934665603ULL;
  for (const auto& t : tensors) {
    auto c = t.detach().cpu().contiguous();
    const auto* p = static_cast<const unsigned char*>(c.data_ptr());
    for (size_t i = 0; i < c.nbytes(); ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

}  // namespace ego3d
