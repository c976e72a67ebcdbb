#include "ego3d/run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>

#include "ego3d/errors.hpp"

namespace ego3d {

namespace {

void reject_unknown(const nlohmann::json& doc, const std::vector<std::string>& known, const std::string& where) {
  if (!doc.is_object()) throw ConfigError(where + ": expected an object");
  std::string bad;
  for (const auto& [key, value] : doc.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) bad += (bad.empty() ? "" : ", ") + key;
  }
  if (bad.empty()) return;
  std::string allowed;
  for (const auto& k : known) allowed += (allowed.empty() ? "" : ", ") + k;
  throw ConfigError(where + ": unknown field(s): " + bad + " (allowed: " + allowed + ")");
}

template <typename T>
void read(const nlohmann::json& doc, const char* key, T& dst, const std::string& where) {
  if (!doc.contains(key)) return;
  try {
    doc.at(key).get_to(dst);
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  reject_unknown(doc, {"output_dir", "seed", "deterministic", "data", "model", "stage1", "stage2", "ablation"},
                 "run config");
  RunConfig c;
  std::string out = c.output_dir.string();
  read(doc, "output_dir", out, "run config");
  c.output_dir = out;
  read(doc, "seed", c.seed, "run config");
  read(doc, "deterministic", c.deterministic, "run config");
  if (doc.contains("data")) {
    const auto& d = doc.at("data");
    reject_unknown(d, {"train_count", "test_count", "image_size", "heatmap_size", "sigma", "baseline_cm", "fov_deg",
                       "skeleton"},
                   "data");
    read(d, "train_count", c.data.train_count, "data");
    read(d, "test_count", c.data.test_count, "data");
    read(d, "image_size", c.data.sizes.image_size, "data");
    read(d, "heatmap_size", c.data.sizes.heatmap_size, "data");
    read(d, "sigma", c.data.sizes.sigma, "data");
    read(d, "baseline_cm", c.data.baseline_cm, "data");
    read(d, "fov_deg", c.data.fov_deg, "data");
    read(d, "skeleton", c.data.skeleton, "data");
  }
  if (doc.contains("model")) {
    auto m = doc.at("model");
    if (!m.is_object()) throw ConfigError("model: expected an object");
    read(m, "preset", c.model_preset, "model");
    m.erase("preset");
    c.model_overrides = m;
  }
  if (doc.contains("stage1")) c.stage1 = TrainConfig::from_json(doc.at("stage1"), c.stage1);
  if (doc.contains("stage2")) c.stage2 = TrainConfig::from_json(doc.at("stage2"), c.stage2);
  if (doc.contains("ablation")) {
    const auto& a = doc.at("ablation");
    reject_unknown(a, {"variants", "seeds"}, "ablation");
    if (a.contains("variants")) {
      std::vector<std::string> names;
      read(a, "variants", names, "ablation");
      c.ablation_variants.clear();
      for (const auto& n : names) c.ablation_variants.push_back(variant_from(n));
    }
    read(a, "seeds", c.ablation_seeds, "ablation");
  }
  if (c.data.train_count < 2) throw ConfigError("data: 'train_count' must be >= 2");
  if (c.data.test_count < 1) throw ConfigError("data: 'test_count' must be >= 1");
  if (c.model_preset != "toy" && c.model_preset != "full") throw ConfigError("model: 'preset' must be toy or full");
  c.stage1.stage = 1;
  c.stage2.stage = 2;
  c.model();  // validates the merged model config
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json model = model_overrides;
  model["preset"] = model_preset;
  std::vector<std::string> variants;
  for (auto v : ablation_variants) variants.push_back(to_string(v));
  auto s1 = stage1.to_json();
  auto s2 = stage2.to_json();
  return {{"output_dir", output_dir.string()},
          {"seed", seed},
          {"deterministic", deterministic},
          {"data",
           {{"train_count", data.train_count},
            {"test_count", data.test_count},
            {"image_size", data.sizes.image_size},
            {"heatmap_size", data.sizes.heatmap_size},
            {"sigma", data.sizes.sigma},
            {"baseline_cm", data.baseline_cm},
            {"fov_deg", data.fov_deg},
            {"skeleton", data.skeleton}}},
          {"model", model},
          {"stage1", s1},
          {"stage2", s2},
          {"ablation", {{"variants", variants}, {"seeds", ablation_seeds}}}};
}

void RunConfig::apply_env() {
  if (const char* v = std::getenv("EGO3D_OUTPUT_DIR"); v && *v) output_dir = v;
  if (const char* v = std::getenv("EGO3D_SEED"); v && *v) {
    char* end = nullptr;
    const auto s = std::strtoull(v, &end, 10);
    if (*end != '\0') throw ConfigError("EGO3D_SEED is not an unsigned integer");
    seed = s;
  }
  if (const char* v = std::getenv("EGO3D_DETERMINISTIC"); v && *v) {
    const std::string s = v;
    if (s == "1" || s == "true") deterministic = true;
    else if (s == "0" || s == "false") deterministic = false;
    else throw ConfigError("EGO3D_DETERMINISTIC must be 0, 1, true or false");
  }
}

Skeleton RunConfig::skeleton() const {
  if (data.skeleton == "unrealego16") return Skeleton::unrealego16();
  if (data.skeleton == "egocap17") return Skeleton::egocap17();
  return Skeleton::load(data.skeleton);
}

FisheyeStereoRig RunConfig::rig() const {
  return FisheyeStereoRig::symmetric(data.sizes.image_size, data.baseline_cm, data.fov_deg * std::numbers::pi / 180.0);
}

PoseSampler RunConfig::sampler() const {
  auto sk = skeleton();
  if (sk.name() != Skeleton::unrealego16().name()) {
    throw ConfigError("data: the pose sampler only supports the unrealego16 skeleton");
  }
  return PoseSampler::unrealego_default(rig());
}

ModelConfig RunConfig::model() const {
  const auto sk = skeleton();
  ModelConfig base = model_preset == "full" ? ModelConfig::full_scale(sk) : ModelConfig::toy(sk);
  base.image_size = data.sizes.image_size;
  base.heatmap_size = data.sizes.heatmap_size;
  auto merged = base.to_json();
  for (const auto& [key, value] : model_overrides.items()) {
    if (!merged.contains(key)) throw ConfigError("model: unknown field '" + key + "'");
    merged[key] = value;
  }
  return ModelConfig::from_json(merged);
}

}  // namespace ego3d
