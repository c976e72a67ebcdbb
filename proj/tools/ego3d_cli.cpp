// ego3d: dataset generation, two-stage training, evaluation, ablation and
// heatmap inspection. Every command writes under the run's output directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ego3d/checkpoint.hpp"
#include "ego3d/dataset_io.hpp"
#include "ego3d/errors.hpp"
#include "ego3d/evaluation.hpp"
#include "ego3d/plots.hpp"
#include "ego3d/run_config.hpp"

namespace fs = std::filesystem;
using namespace ego3d;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<uint64_t> seed;
  bool deterministic = false;
};

RunConfig resolve(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : RunConfig::load(c.config);
  rc.apply_env();
  if (!c.out.empty()) rc.output_dir = c.out;
  if (c.seed) rc.seed = *c.seed;
  if (c.deterministic) rc.deterministic = true;
  rc.stage1.seed = rc.seed;
  rc.stage2.seed = rc.seed;
  rc.stage1.deterministic = rc.deterministic;
  rc.stage2.deterministic = rc.deterministic;
  return rc;
}

void note(const std::string& s) { std::cerr << s << '\n'; }

void write_json(const fs::path& path, const nlohmann::json& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
}

TensorDataset load_split(const RunConfig& rc, const std::string& split) {
  const auto dir = rc.dataset_dir(split);
  if (!fs::exists(dir / "manifest.json")) {
    throw ConfigError("dataset not found at " + dir.string() + "; run 'ego3d generate' first");
  }
  return TensorDataset::from(read_dataset(dir));
}

int cmd_generate(const RunConfig& rc) {
  seed_everything(rc.seed, rc.deterministic);
  const auto sampler = rc.sampler();
  for (const auto& [split, count, seed] : {std::tuple{std::string("train"), rc.data.train_count, rc.train_seed()},
                                           std::tuple{std::string("test"), rc.data.test_count, rc.test_seed()}}) {
    auto ds = generate_dataset(sampler, rc.data.sizes, static_cast<size_t>(count), seed, split);
    const auto dir = rc.dataset_dir(split);
    if (fs::exists(dir)) fs::remove_all(dir);
    write_dataset(ds, dir);
    note("wrote " + std::to_string(count) + " " + split + " samples to " + dir.string());
  }
  write_json(rc.output_dir / "config.json", rc.to_json());
  return 0;
}

int cmd_train(const RunConfig& rc, int stage, const std::string& checkpoint) {
  auto train = load_split(rc, "train");
  seed_everything(rc.seed, rc.deterministic);
  NetBundle net(rc.model());
  TrainOutputs out;
  out.checkpoint_dir = rc.checkpoint_dir();
  out.log_path = rc.log_dir() / ("stage" + std::to_string(stage) + ".jsonl");
  TrainResult result;
  if (stage == 1) {
    result = train_stage1(net, train, rc.stage1, out);
  } else if (stage == 2) {
    load_stage1(net, checkpoint.empty() ? rc.checkpoint_dir() / "stage1.ckpt" : fs::path(checkpoint));
    result = train_stage2(net, train, rc.stage2, out);
  } else {
    throw ConfigError("--stage must be 1 or 2");
  }
  nlohmann::json summary = {{"stage", stage},
                            {"steps", result.steps_taken},
                            {"epoch_loss", result.epoch_loss},
                            {"checkpoint", result.checkpoint.string()}};
  write_json(rc.log_dir() / ("stage" + std::to_string(stage) + "_summary.json"), summary);
  std::vector<LineSeries> series(1);
  series[0].label = "total";
  for (size_t i = 0; i < result.epoch_loss.size(); ++i) {
    series[0].x.push_back(static_cast<double>(i + 1));
    series[0].y.push_back(result.epoch_loss[i]);
  }
  write_svg_lines(rc.log_dir() / ("stage" + std::to_string(stage) + "_loss.svg"),
                  "Stage " + std::to_string(stage) + " training loss", "epoch", "mean loss", series);
  note("stage " + std::to_string(stage) + ": " + std::to_string(result.steps_taken) + " steps, checkpoint " +
       result.checkpoint.string());
  return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& checkpoint) {
  const fs::path ckpt = checkpoint.empty() ? rc.checkpoint_dir() / "stage2.ckpt" : fs::path(checkpoint);
  auto net = load_bundle(ckpt);
  auto test = load_split(rc, "test");
  const auto sampler = rc.sampler();
  std::vector<std::string> names;
  for (const auto& c : sampler.categories) names.push_back(c.name);
  auto report = evaluate(net, test, rc.skeleton(), names);
  const auto dir = rc.output_dir / "eval";
  fs::create_directories(dir);
  write_report_csv(report, dir / "report.csv");
  auto cdf = error_cdf(report);
  write_cdf_csv(cdf, dir / "cdf.csv");
  std::vector<LineSeries> series;
  for (size_t g = 0; g < cdf.groups.size(); ++g) series.push_back({cdf.groups[g], cdf.thresholds_mm, cdf.fraction[g]});
  write_svg_lines(dir / "cdf.svg", "Per-joint error CDF", "error (mm)", "fraction of joints", series);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.per_category) {
    rows.push_back({{"category", r.name}, {"count", r.count}, {"mpjpe_mm", r.mpjpe_mm}, {"pa_mpjpe_mm", r.pa_mpjpe_mm}});
  }
  nlohmann::json doc = {{"checkpoint", ckpt.string()},
                        {"variant", to_string(net->config.variant)},
                        {"count", report.count},
                        {"mpjpe_mm", report.mpjpe_mm},
                        {"pa_mpjpe_mm", report.pa_mpjpe_mm},
                        {"per_category", rows},
                        {"config_hash", report.config_hash}};
  if (net->stereo_matcher) {
    doc["orientation_error_deg"] = orientation_error_deg(net, estimate_heatmaps(net, test.images), test.orientations);
  }
  write_json(dir / "report.json", doc);
  std::printf("MPJPE %.2f mm  PA-MPJPE %.2f mm  (%zu samples)\n", report.mpjpe_mm, report.pa_mpjpe_mm, report.count);
  return 0;
}

int cmd_ablate(const RunConfig& rc) {
  auto train = load_split(rc, "train");
  auto test = load_split(rc, "test");
  AblationSpec spec;
  spec.model = rc.model();
  spec.stage1 = rc.stage1;
  spec.stage2 = rc.stage2;
  spec.variants = rc.ablation_variants;
  spec.seeds = rc.ablation_seeds;
  auto result = ablation_run(train, test, rc.skeleton(), spec, note);
  const auto dir = rc.output_dir / "ablation";
  write_ablation_csv(result, dir / "ablation.csv");
  write_ablation_plot(result, dir / "ablation.svg");
  const auto table = format_ablation(result);
  std::ofstream(dir / "ablation.txt") << table;
  std::cout << table;
  return 0;
}

Heatmap slice(const FloatTensor& t, int channel, ChannelKind kind) {
  const int h = static_cast<int>(t.shape[1]), w = static_cast<int>(t.shape[2]);
  Heatmap m({h, w}, kind);
  const size_t off = static_cast<size_t>(channel) * h * w;
  for (size_t i = 0; i < m.values.size(); ++i) m.values[i] = t.data[off + i];
  return m;
}

FloatTensor from_tensor(const torch::Tensor& t) {
  auto c = t.to(torch::kFloat32).contiguous();
  FloatTensor f;
  f.shape = c.sizes().vec();
  f.data.assign(c.data_ptr<float>(), c.data_ptr<float>() + c.numel());
  return f;
}

void dump_heatmaps(const fs::path& dir, const std::string& tag, const FloatTensor& jh, const FloatTensor& peh,
                   const std::array<RgbImage, 2>& images, nlohmann::json& summary) {
  const int joints = static_cast<int>(jh.shape[0] / 2);
  const int limbs = static_cast<int>(peh.shape[0] / 4);
  const int scale = images[0].width / static_cast<int>(jh.shape[2]);
  for (int view = 0; view < 2; ++view) {
    const std::string v = view == 0 ? "left" : "right";
    Heatmap all({static_cast<int>(jh.shape[1]), static_cast<int>(jh.shape[2])}, ChannelKind::joint_confidence);
    for (int j = 0; j < joints; ++j) {
      auto m = slice(jh, 2 * j + view, ChannelKind::joint_confidence);
      for (size_t i = 0; i < m.values.size(); ++i) all.values[i] = std::max(all.values[i], std::clamp(m.values[i], 0.0, 1.0));
    }
    write_ppm(dir / (tag + "_jh_" + v + ".ppm"), overlay(images[view], colorize(all, scale), 0.6f));
    for (int l = 0; l < limbs; ++l) {
      auto s = slice(peh, 4 * l + 2 * view, ChannelKind::peh_sin);
      auto c = slice(peh, 4 * l + 2 * view + 1, ChannelKind::peh_cos);
      write_ppm(dir / (tag + "_peh_limb" + std::to_string(l) + "_" + v + ".ppm"), colorize_peh(s, c, scale));
      auto a = decode_angle(s, c);
      summary[tag]["limb" + std::to_string(l)][v] = {{"theta_deg", a.theta * 180.0 / std::numbers::pi},
                                                     {"confidence", a.confidence}};
    }
  }
}

int cmd_inspect(const RunConfig& rc, const std::string& dataset, size_t index, const std::string& checkpoint) {
  const fs::path dir_in = dataset.empty() ? rc.dataset_dir("test") : fs::path(dataset);
  DatasetReader reader(dir_in);
  if (index >= reader.size()) {
    throw IndexError("sample index " + std::to_string(index) + " out of range (dataset has " +
                     std::to_string(reader.size()) + ")");
  }
  auto rec = reader.read(index);
  const auto& img = rec.get("images");
  const int s = static_cast<int>(img.shape[2]);
  std::array<RgbImage, 2> images = {RgbImage(s, s), RgbImage(s, s)};
  for (int v = 0; v < 2; ++v) {
    for (int ch = 0; ch < 3; ++ch) {
      for (int r = 0; r < s; ++r) {
        for (int c = 0; c < s; ++c) images[v].at(r, c, ch) = img.data[((static_cast<size_t>(v) * 3 + ch) * s + r) * s + c];
      }
    }
  }
  const auto out = rc.output_dir / "inspect" / ("sample_" + std::to_string(index));
  fs::create_directories(out);
  write_ppm(out / "image_left.ppm", images[0]);
  write_ppm(out / "image_right.ppm", images[1]);
  nlohmann::json summary = {{"dataset", dir_in.string()}, {"index", index}, {"category", rec.category}};
  dump_heatmaps(out, "gt", rec.get("jh"), rec.get("peh"), images, summary);
  if (!checkpoint.empty()) {
    auto net = load_bundle(checkpoint);
    auto t = torch::from_blob(const_cast<float*>(img.data.data()), img.shape, torch::kFloat32).unsqueeze(0).clone();
    auto est = estimate_heatmaps(net, t, 1);
    dump_heatmaps(out, "pred", from_tensor(est.jh[0]), from_tensor(est.peh[0]), images, summary);
    auto pose = predict_from_heatmaps(net, est, 1)[0];
    summary["pred_pose_cm"] = std::vector<std::vector<float>>();
    for (int64_t j = 0; j < pose.size(0); ++j) {
      summary["pred_pose_cm"].push_back({pose[j][0].item<float>(), pose[j][1].item<float>(), pose[j][2].item<float>()});
    }
  }
  write_json(out / "summary.json", summary);
  note("wrote inspection images to " + out.string());
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Run config JSON")->check(CLI::ExistingFile);
  sub->add_option("--out", c.out, "Output directory (overrides config and EGO3D_OUTPUT_DIR)");
  sub->add_option("--seed", c.seed, "Seed (overrides config and EGO3D_SEED)");
  sub->add_flag("--deterministic", c.deterministic, "Single-threaded, bit-reproducible execution");
}

void print_error(const std::string& kind, const std::string& message) {
  nlohmann::json err = {{"error", kind}, {"message", message}};
  std::cerr << err.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ego3d: binocular egocentric 3D pose toolkit"};
  app.require_subcommand(1);
  Common common;
  int stage = 0;
  std::string checkpoint, dataset;
  size_t index = 0;

  auto* gen = app.add_subcommand("generate", "Synthesize the train and test datasets");
  add_common(gen, common);
  auto* train = app.add_subcommand("train", "Run one training stage");
  add_common(train, common);
  train->add_option("--stage", stage, "1 (extractors) or 2 (3D reconstructor)")->required()->check(CLI::IsMember({1, 2}));
  train->add_option("--checkpoint", checkpoint, "Stage-1 checkpoint for stage 2");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(eval, common);
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate (default: stage2.ckpt of the run)");
  auto* ablate = app.add_subcommand("ablate", "Train and compare the four model variants over seeds");
  add_common(ablate, common);
  auto* inspect = app.add_subcommand("inspect", "Dump ground-truth and predicted heatmaps of one sample");
  add_common(inspect, common);
  inspect->add_option("--dataset", dataset, "Dataset directory (default: the run's test split)");
  inspect->add_option("--index", index, "Sample index");
  inspect->add_option("--checkpoint", checkpoint, "Also dump this model's predictions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto rc = resolve(common);
    if (*gen) return cmd_generate(rc);
    if (*train) return cmd_train(rc, stage, checkpoint);
    if (*eval) return cmd_eval(rc, checkpoint);
    if (*ablate) return cmd_ablate(rc);
    if (*inspect) return cmd_inspect(rc, dataset, index, checkpoint);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 1;
}
