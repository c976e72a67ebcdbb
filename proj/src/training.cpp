#include "ego3d/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "ego3d/checkpoint.hpp"
#include "ego3d/errors.hpp"

namespace ego3d {

// ---------------------------------------------------------------------------
// Data

namespace {

torch::Tensor stack_field(const Dataset& dataset, const std::string& name) {
  const auto& first = dataset.records.front().get(name);
  std::vector<int64_t> shape = {static_cast<int64_t>(dataset.records.size())};
  shape.insert(shape.end(), first.shape.begin(), first.shape.end());
  auto out = torch::empty(shape, torch::kFloat32);
  const int64_t per = FloatTensor::numel_of(first.shape);
  float* dst = out.data_ptr<float>();
  for (size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& t = dataset.records[i].get(name);
    if (t.shape != first.shape) throw DimensionError("dataset: field '" + name + "' changes shape between samples");
    std::copy(t.data.begin(), t.data.end(), dst + static_cast<int64_t>(i) * per);
  }
  return out;
}

}  // namespace

TensorDataset TensorDataset::from(const Dataset& dataset) {
  if (dataset.records.empty()) throw ParameterError("dataset is empty");
  TensorDataset d;
  d.images = stack_field(dataset, "images");
  d.jh = stack_field(dataset, "jh");
  d.peh = stack_field(dataset, "peh");
  d.local_pose = stack_field(dataset, "local_pose");
  d.orientations = stack_field(dataset, "orientations");
  d.pixel_lengths = stack_field(dataset, "pixel_lengths");
  for (const auto& r : dataset.records) d.categories.push_back(r.category);
  return d;
}

TensorDataset TensorDataset::subset(const torch::Tensor& index) const {
  TensorDataset d;
  d.images = images.index_select(0, index);
  d.jh = jh.index_select(0, index);
  d.peh = peh.index_select(0, index);
  d.local_pose = local_pose.index_select(0, index);
  d.orientations = orientations.index_select(0, index);
  d.pixel_lengths = pixel_lengths.index_select(0, index);
  auto acc = index.to(torch::kLong).contiguous();
  for (int64_t i = 0; i < acc.numel(); ++i) d.categories.push_back(categories.at(acc[i].item<int64_t>()));
  return d;
}

// ---------------------------------------------------------------------------
// Config

TrainConfig TrainConfig::stage1_default() {
  TrainConfig c;
  c.stage = 1;
  c.optimizer = "adam";
  c.lr = 1e-3;
  return c;
}

TrainConfig TrainConfig::stage2_default() {
  TrainConfig c;
  c.stage = 2;
  c.optimizer = "sgd";
  c.lr = 0.02;
  c.momentum = 0.9;
  return c;
}

TrainConfig TrainConfig::long_run(int stage) {
  TrainConfig c = stage == 1 ? stage1_default() : stage2_default();
  c.epochs = 100.0;
  c.decay_start = 50.0;
  return c;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("train config: '" + field + "' " + why);
  };
  if (stage != 1 && stage != 2) fail("stage", "must be 1 or 2");
  if (!(epochs >= 0.0)) fail("epochs", "must be >= 0");
  if (!(decay_start >= 0.0) || decay_start > epochs) fail("decay_start", "must lie in [0, epochs]");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (optimizer != "adam" && optimizer != "sgd") fail("optimizer", "must be 'adam' or 'sgd'");
  if (!(lr > 0.0)) fail("lr", "must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail("momentum", "must lie in [0, 1)");
  if (checkpoint_every < 0) fail("checkpoint_every", "must be >= 0");
  try {
    weights.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"stage", stage},
          {"epochs", epochs},
          {"decay_start", decay_start},
          {"batch_size", batch_size},
          {"optimizer", optimizer},
          {"lr", lr},
          {"momentum", momentum},
          {"seed", seed},
          {"checkpoint_every", checkpoint_every},
          {"max_steps", max_steps},
          {"deterministic", deterministic},
          {"shuffle", shuffle},
          {"weights",
           {{"jh", weights.jh},
            {"ph", weights.ph},
            {"trans", weights.trans},
            {"pose", weights.pose},
            {"recon", weights.recon},
            {"cos", weights.cos}}}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc, const TrainConfig& base) {
  if (!doc.is_object()) throw ConfigError("train config: expected an object");
  TrainConfig c = base;
  const auto known = base.to_json();
  std::string unknown;
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  }
  if (!unknown.empty()) throw ConfigError("train config: unknown field(s): " + unknown);
  auto get = [&](const nlohmann::json& src, const char* key, auto& dst, const std::string& where) {
    if (!src.contains(key)) return;
    try {
      src.at(key).get_to(dst);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("train config: field '" + where + key + "' has the wrong type");
    }
  };
  get(doc, "stage", c.stage, "");
  get(doc, "epochs", c.epochs, "");
  get(doc, "decay_start", c.decay_start, "");
  get(doc, "batch_size", c.batch_size, "");
  get(doc, "optimizer", c.optimizer, "");
  get(doc, "lr", c.lr, "");
  get(doc, "momentum", c.momentum, "");
  get(doc, "seed", c.seed, "");
  get(doc, "checkpoint_every", c.checkpoint_every, "");
  get(doc, "max_steps", c.max_steps, "");
  get(doc, "deterministic", c.deterministic, "");
  get(doc, "shuffle", c.shuffle, "");
  if (doc.contains("weights")) {
    const auto& w = doc.at("weights");
    const auto known_w = known.at("weights");
    std::string bad;
    for (const auto& [key, value] : w.items()) {
      if (!known_w.contains(key)) bad += (bad.empty() ? "" : ", ") + key;
    }
    if (!bad.empty()) throw ConfigError("train config: unknown weight(s): " + bad);
    get(w, "jh", c.weights.jh, "weights.");
    get(w, "ph", c.weights.ph, "weights.");
    get(w, "trans", c.weights.trans, "weights.");
    get(w, "pose", c.weights.pose, "weights.");
    get(w, "recon", c.weights.recon, "weights.");
    get(w, "cos", c.weights.cos, "weights.");
  }
  c.validate();
  return c;
}

double lr_at(double epoch, const TrainConfig& cfg) {
  if (epoch <= cfg.decay_start) return cfg.lr;
  if (epoch >= cfg.epochs) return 0.0;
  return cfg.lr * (cfg.epochs - epoch) / (cfg.epochs - cfg.decay_start);
}

nlohmann::json StepRecord::to_json() const {
  nlohmann::json l = nlohmann::json::object();
  for (const auto& [k, v] : losses) l[k] = v;
  return {{"step", step}, {"stage", stage}, {"losses", l}, {"lr", lr}};
}

void seed_everything(uint64_t seed, bool deterministic) {
  torch::manual_seed(seed);
  if (deterministic) at::set_num_threads(1);
}

// ---------------------------------------------------------------------------
// Loop

namespace {

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, std::vector<torch::Tensor> params) {
    if (cfg.optimizer == "adam") {
      opt_ = std::make_unique<torch::optim::Adam>(params, torch::optim::AdamOptions(cfg.lr));
    } else {
      opt_ = std::make_unique<torch::optim::SGD>(params, torch::optim::SGDOptions(cfg.lr).momentum(cfg.momentum));
    }
  }
  void set_lr(double lr) {
    for (auto& group : opt_->param_groups()) group.options().set_lr(lr);
  }
  torch::optim::Optimizer& operator*() { return *opt_; }
  torch::optim::Optimizer* operator->() { return opt_.get(); }

 private:
  std::unique_ptr<torch::optim::Optimizer> opt_;
};

struct Batch {
  torch::Tensor index;
  std::vector<int64_t> rows;
};

/// Per-epoch batch order; the remainder that does not fill a batch is dropped
/// (batch normalization needs more than one row).
class BatchPlan {
 public:
  BatchPlan(int64_t n, const TrainConfig& cfg) : n_(n), cfg_(cfg) {
    batch_ = std::min<int64_t>(cfg.batch_size, n);
    per_epoch_ = std::max<int64_t>(1, n / batch_);
  }
  int64_t per_epoch() const { return per_epoch_; }
  Batch at(int64_t step) {
    const int64_t epoch = step / per_epoch_;
    if (epoch != cached_epoch_) {
      order_.resize(n_);
      std::iota(order_.begin(), order_.end(), 0);
      if (cfg_.shuffle) {
        std::mt19937_64 rng(cfg_.seed * 0x9E3779B97F4A7C15ULL + static_cast<uint64_t>(epoch) + 1);
        for (int64_t i = n_ - 1; i > 0; --i) {
          std::swap(order_[i], order_[rng() % static_cast<uint64_t>(i + 1)]);
        }
      }
      cached_epoch_ = epoch;
    }
    const int64_t k = step % per_epoch_;
    Batch b;
    b.rows.assign(order_.begin() + k * batch_, order_.begin() + (k + 1) * batch_);
    b.index = torch::tensor(b.rows, torch::kLong);
    return b;
  }

 private:
  int64_t n_;
  TrainConfig cfg_;
  int64_t batch_ = 1;
  int64_t per_epoch_ = 1;
  int64_t cached_epoch_ = -1;
  std::vector<int64_t> order_;
};

std::string rows_text(const std::vector<int64_t>& rows) {
  std::string s;
  for (auto r : rows) s += (s.empty() ? "" : ",") + std::to_string(r);
  return s;
}

void guard_finite(const std::vector<std::pair<std::string, double>>& losses, int stage, int64_t step,
                  const std::vector<int64_t>& rows) {
  for (const auto& [name, v] : losses) {
    if (!std::isfinite(v)) {
      throw TrainingError("stage " + std::to_string(stage) + " step " + std::to_string(step) + ": loss '" + name +
                          "' is not finite (" + std::to_string(v) + ") on batch rows [" + rows_text(rows) + "]");
    }
  }
}

/// Shared driver: `step_fn` runs one optimization step and returns the named losses (total last).
TrainResult run_loop(NetBundle& bundle, int64_t n, const TrainConfig& cfg, const TrainOutputs& outputs,
                     std::vector<torch::Tensor> params,
                     const std::function<std::vector<std::pair<std::string, double>>(const Batch&)>& step_fn) {
  cfg.validate();
  if (n < 1) throw ParameterError("training set is empty");
  TrainResult result;
  BatchPlan plan(n, cfg);
  Optimizer opt(cfg, std::move(params));
  int64_t total = static_cast<int64_t>(std::ceil(cfg.epochs * static_cast<double>(plan.per_epoch()) - 1e-9));
  if (cfg.max_steps >= 0) total = std::min(total, cfg.max_steps);

  std::ofstream log;
  if (!outputs.log_path.empty()) {
    if (outputs.log_path.has_parent_path()) std::filesystem::create_directories(outputs.log_path.parent_path());
    log.open(outputs.log_path);
    if (!log) throw ConfigError("cannot write training log " + outputs.log_path.string());
  }
  auto save = [&](const std::string& name) {
    if (outputs.checkpoint_dir.empty()) return std::filesystem::path{};
    auto path = outputs.checkpoint_dir / name;
    save_checkpoint(path, bundle, cfg.stage, {{"train", cfg.to_json()}, {"steps", result.steps_taken}});
    return path;
  };

  double epoch_sum = 0.0;
  int64_t epoch_count = 0;
  for (int64_t step = 0; step < total; ++step) {
    const double epoch_f = static_cast<double>(step) / static_cast<double>(plan.per_epoch());
    const double lr = lr_at(epoch_f, cfg);
    opt.set_lr(lr);
    auto batch = plan.at(step);
    opt->zero_grad();
    auto losses = step_fn(batch);
    guard_finite(losses, cfg.stage, step, batch.rows);
    opt->step();

    StepRecord rec{step, cfg.stage, losses, lr};
    if (log) log << rec.to_json().dump() << '\n';
    if (outputs.on_step) outputs.on_step(rec);
    result.steps.push_back(std::move(rec));
    result.steps_taken = step + 1;
    epoch_sum += losses.back().second;
    ++epoch_count;
    if ((step + 1) % plan.per_epoch() == 0 || step + 1 == total) {
      result.epoch_loss.push_back(epoch_sum / static_cast<double>(epoch_count));
      epoch_sum = 0.0;
      epoch_count = 0;
      const int64_t epoch_done = (step + 1) / plan.per_epoch();
      if (cfg.checkpoint_every > 0 && (step + 1) % plan.per_epoch() == 0 && epoch_done % cfg.checkpoint_every == 0) {
        save("stage" + std::to_string(cfg.stage) + "_epoch" + std::to_string(epoch_done) + ".ckpt");
      }
    }
  }
  result.checkpoint = save("stage" + std::to_string(cfg.stage) + ".ckpt");
  return result;
}

torch::Tensor select_peh(const NetBundle& bundle, const torch::Tensor& peh) {
  return bundle->config.uses_peh() ? peh : torch::Tensor();
}

}  // namespace

EstimatedHeatmaps estimate_heatmaps(NetBundle& bundle, const torch::Tensor& images, int batch_size) {
  torch::NoGradGuard no_grad;
  bundle->jh_extractor->eval();
  bundle->peh_extractor->eval();
  std::vector<torch::Tensor> jh, peh;
  for (int64_t i = 0; i < images.size(0); i += batch_size) {
    auto [a, b] = bundle->extract(images.narrow(0, i, std::min<int64_t>(batch_size, images.size(0) - i)));
    jh.push_back(a);
    peh.push_back(b);
  }
  return {torch::cat(jh, 0), torch::cat(peh, 0)};
}

TrainResult train_stage1(NetBundle& bundle, const TensorDataset& data, const TrainConfig& cfg,
                         const TrainOutputs& outputs) {
  if (cfg.stage != 1) throw ConfigError("train_stage1: config stage is " + std::to_string(cfg.stage));
  if (!data.jh.defined() || !data.peh.defined()) throw ConfigError("stage 1 needs ground-truth heatmaps");
  if (data.jh.size(1) != bundle->config.jh_channels() || data.peh.size(1) != bundle->config.peh_channels()) {
    throw DimensionError("stage 1: dataset heatmap channels do not match the model");
  }
  if (data.images.size(3) != bundle->config.image_size) {
    throw DimensionError("stage 1: dataset image size does not match the model");
  }
  bundle->jh_extractor->train();
  bundle->peh_extractor->train();
  return run_loop(bundle, data.size(), cfg, outputs, bundle->extractor_parameters(), [&](const Batch& b) {
    auto [jh, peh] = bundle->extract(data.images.index_select(0, b.index));
    Loss2DParts parts{loss_jh(jh, data.jh.index_select(0, b.index)),
                      loss_ph(peh, data.peh.index_select(0, b.index), data.pixel_lengths.index_select(0, b.index))};
    auto total = total_2d(parts, cfg.weights);
    total.backward();
    return std::vector<std::pair<std::string, double>>{
        {"jh", parts.jh.item<double>()}, {"ph", parts.ph.item<double>()}, {"total", total.item<double>()}};
  });
}

Stage2Losses stage2_losses(NetBundle& bundle, const torch::Tensor& est_jh, const torch::Tensor& est_peh,
                           const torch::Tensor& gt_pose, const torch::Tensor& gt_orientations,
                           const LossWeights& weights) {
  const auto& cfg = bundle->config;
  auto peh = cfg.uses_peh() ? est_peh : torch::Tensor();
  auto out = bundle->reconstruct(est_jh, peh);
  Stage2Losses l;
  l.trans = cfg.uses_sm() ? loss_trans(out.orientations, gt_orientations) : torch::zeros({}, gt_pose.options());
  l.pose = loss_pose(out.pose, gt_pose, cfg.estimated_joints);
  auto peh_for_recon = select_peh(bundle, est_peh);
  torch::Tensor recon_jh = out.recon.narrow(1, 0, cfg.jh_channels());
  torch::Tensor recon_ph;
  if (cfg.uses_peh()) recon_ph = out.recon.narrow(1, cfg.jh_channels(), cfg.peh_channels());
  l.recon = loss_recon(recon_jh, est_jh, recon_ph, peh_for_recon);
  auto cos = loss_cos(out.pose, gt_pose, cfg.peh_limbs);
  l.cos = cos.value;
  l.cos_skipped = cos.skipped;
  l.total = total_3d({l.trans, l.pose, l.recon, l.cos}, weights);
  return l;
}

TrainResult train_stage2(NetBundle& bundle, const TensorDataset& data, const TrainConfig& cfg,
                         const TrainOutputs& outputs, const std::optional<EstimatedHeatmaps>& estimated) {
  if (cfg.stage != 2) throw ConfigError("train_stage2: config stage is " + std::to_string(cfg.stage));
  EstimatedHeatmaps est = estimated ? *estimated : estimate_heatmaps(bundle, data.images);
  if (est.jh.size(0) != data.size()) throw DimensionError("stage 2: estimated heatmaps do not match the dataset");
  bundle->jh_extractor->eval();
  bundle->peh_extractor->eval();
  {
    torch::NoGradGuard no_grad;
    bundle->decoder->mean_pose.copy_(data.local_pose.mean(0));
  }
  bundle->encoder->train();
  bundle->decoder->train();
  bundle->reconstructor->train();
  if (bundle->stereo_matcher) bundle->stereo_matcher->train();
  return run_loop(bundle, data.size(), cfg, outputs, bundle->reconstructor_parameters(), [&](const Batch& b) {
    auto l = stage2_losses(bundle, est.jh.index_select(0, b.index), est.peh.index_select(0, b.index),
                           data.local_pose.index_select(0, b.index), data.orientations.index_select(0, b.index),
                           cfg.weights);
    l.total.backward();
    std::vector<std::pair<std::string, double>> named = {{"trans", l.trans.item<double>()},
                                                         {"pose", l.pose.item<double>()},
                                                         {"recon", l.recon.item<double>()},
                                                         {"cos", l.cos.item<double>()}};
    if (l.cos_skipped > 0) named.emplace_back("cos_skipped", static_cast<double>(l.cos_skipped));
    named.emplace_back("total", l.total.item<double>());
    return named;
  });
}

void load_stage1(NetBundle& bundle, const std::filesystem::path& checkpoint) {
  if (checkpoint.empty() || !std::filesystem::exists(checkpoint)) {
    throw ConfigError("stage 2 needs a stage-1 checkpoint; not found: " + checkpoint.string());
  }
  auto data = read_checkpoint(checkpoint);
  if (data.stage < 1) throw ConfigError("checkpoint " + checkpoint.string() + " holds no trained extractors");
  if (data.config.image_size != bundle->config.image_size || data.config.heatmap_size != bundle->config.heatmap_size ||
      data.config.backbone_width != bundle->config.backbone_width ||
      data.config.decoder_width != bundle->config.decoder_width) {
    throw ConfigError("stage-1 checkpoint extractor dimensions differ from the model config");
  }
  load_state(bundle, data, {"jh_extractor.", "peh_extractor."});
}

std::vector<std::string> stage_parameter_names(NetBundle& bundle, int stage) {
  std::vector<std::string> names;
  for (const auto& p : bundle->named_parameters(true)) {
    const auto& k = p.key();
    const bool extractor = k.rfind("jh_extractor.", 0) == 0 || k.rfind("peh_extractor.", 0) == 0;
    if ((stage == 1) == extractor) names.push_back(k);
  }
  return names;
}

std::vector<std::pair<std::string, double>> stereo_matcher_gradient_probe(
    NetBundle& bundle, const torch::Tensor& est_jh, const torch::Tensor& est_peh, const torch::Tensor& gt_pose,
    const torch::Tensor& gt_orientations, const LossWeights& weights) {
  if (!bundle->stereo_matcher) throw ConfigError("gradient probe: the variant has no stereo matcher");
  std::vector<std::pair<std::string, double>> out;
  for (const char* name : {"trans", "pose", "cos", "recon"}) {
    bundle->zero_grad();
    auto l = stage2_losses(bundle, est_jh, est_peh, gt_pose, gt_orientations, weights);
    const std::string n = name;
    torch::Tensor target = n == "trans" ? l.trans : n == "pose" ? l.pose : n == "cos" ? l.cos : l.recon;
    if (target.requires_grad()) target.backward();
    double norm = 0.0;
    for (const auto& p : bundle->stereo_matcher->parameters()) {
      if (p.grad().defined()) norm += p.grad().pow(2).sum().item<double>();
    }
    out.emplace_back(n, std::sqrt(norm));
  }
  bundle->zero_grad();
  return out;
}

}  // namespace ego3d
