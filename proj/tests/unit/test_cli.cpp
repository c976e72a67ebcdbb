#include "torch_doctest.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ego3d/errors.hpp"
#include "ego3d/run_config.hpp"

namespace fs = std::filesystem;
using namespace ego3d;

namespace {

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "ego3d_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run cli(const std::string& args) {
  static int counter = 0;
  const auto base = fs::temp_directory_path() / "ego3d_test_cli";
  fs::create_directories(base);
  const auto out = base / ("stdout" + std::to_string(counter) + ".txt");
  const auto err = base / ("stderr" + std::to_string(counter++) + ".txt");
  const std::string cmd = std::string(EGO3D_CLI) + " " + args + " > " + out.string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_config(const fs::path& dir, const nlohmann::json& doc) {
  auto p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

nlohmann::json small_config(const fs::path& out, double epochs) {
  return {{"output_dir", out.string()},
          {"seed", 5},
          {"data", {{"train_count", 16}, {"test_count", 8}}},
          {"stage1", {{"epochs", epochs}, {"decay_start", epochs}, {"batch_size", 8}}},
          {"stage2", {{"epochs", epochs}, {"decay_start", epochs}, {"batch_size", 8}}}};
}

}  // namespace

TEST_CASE("run config json") {
  RunConfig def;
  CHECK(def.data.sizes.image_size == 64);
  CHECK(def.data.sizes.heatmap_size == 16);
  CHECK(def.stage1.stage == 1);
  CHECK(def.stage2.stage == 2);
  CHECK(def.ablation_seeds == std::vector<uint64_t>{0, 1, 2});
  CHECK(def.ablation_variants.size() == 4);

  auto doc = small_config("/tmp/x", 2);
  doc["model"] = {{"preset", "toy"}, {"pose_feature_dim", 12}};
  doc["ablation"] = {{"variants", {"B", "B+PH+SM"}}, {"seeds", {4}}};
  auto rc = RunConfig::from_json(doc);
  CHECK(rc.output_dir == fs::path("/tmp/x"));
  CHECK(rc.seed == 5);
  CHECK(rc.data.train_count == 16);
  CHECK(rc.stage1.epochs == 2);
  CHECK(rc.stage2.optimizer == TrainConfig::stage2_default().optimizer);
  CHECK(rc.model().pose_feature_dim == 12);
  CHECK(rc.model().image_size == 64);
  CHECK(rc.ablation_seeds == std::vector<uint64_t>{4});
  CHECK((rc.ablation_variants == std::vector<Variant>{Variant::baseline, Variant::full}));
  CHECK(RunConfig::from_json(rc.to_json()).to_json() == rc.to_json());
  CHECK(rc.test_seed() != rc.train_seed());

  auto full = RunConfig::from_json({{"model", {{"preset", "full"}}}, {"data", {{"image_size", 256}, {"heatmap_size", 64}}}});
  CHECK(full.model().encoder_volume() == 16384);
}

TEST_CASE("run config rejects unknown keys and lists the fields") {
  try {
    RunConfig::from_json({{"outptu_dir", "x"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string w = e.what();
    CHECK(w.find("outptu_dir") != std::string::npos);
    CHECK(w.find("output_dir") != std::string::npos);
    CHECK(w.find("stage2") != std::string::npos);
  }
  CHECK_THROWS_AS(RunConfig::from_json({{"data", {{"train_cnt", 3}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"stage1", {{"lrate", 3}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"model", {{"preset", "huge"}}}}).model(), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"model", {{"widthh", 1}}}}).model(), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"ablation", {{"variants", {"B+Q"}}}}}), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json({{"seed", "zero"}}), ConfigError);
}

TEST_CASE("environment overrides") {
  RunConfig rc;
  setenv("EGO3D_OUTPUT_DIR", "/tmp/env_out", 1);
  setenv("EGO3D_SEED", "42", 1);
  setenv("EGO3D_DETERMINISTIC", "false", 1);
  rc.apply_env();
  CHECK(rc.output_dir == fs::path("/tmp/env_out"));
  CHECK(rc.seed == 42);
  CHECK_FALSE(rc.deterministic);
  setenv("EGO3D_SEED", "4x", 1);
  CHECK_THROWS_AS(rc.apply_env(), ConfigError);
  unsetenv("EGO3D_OUTPUT_DIR");
  unsetenv("EGO3D_SEED");
  unsetenv("EGO3D_DETERMINISTIC");
}

TEST_CASE("cli usage errors exit with code 2") {
  CHECK(cli("--no-such-flag").code == 2);
  CHECK(cli("generate --bogus").code == 2);
  CHECK(cli("train").code == 2);  // --stage is required
  CHECK(cli("train --stage 3").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("cli failures print a JSON error") {
  auto dir = temp_dir("errors");
  auto cfg = write_config(dir, {{"output_dir", (dir / "run").string()}, {"bogus_key", 1}});
  auto r = cli("generate --config " + cfg.string());
  CHECK(r.code == 1);
  auto j = nlohmann::json::parse(r.err);
  CHECK(j["error"] == "config");
  CHECK(j["message"].get<std::string>().find("bogus_key") != std::string::npos);

  auto good = write_config(dir, small_config(dir / "run", 0));
  auto m = cli("eval --config " + good.string() + " --checkpoint " + (dir / "missing.ckpt").string());
  CHECK(m.code == 1);
  auto mj = nlohmann::json::parse(m.err);
  CHECK(mj["error"] == "config");
  CHECK(mj["message"].get<std::string>().find("missing.ckpt") != std::string::npos);
}

TEST_CASE("generate, train and eval an untrained model") {
  auto dir = temp_dir("pipeline");
  auto cfg = write_config(dir, small_config(dir / "run", 0));
  const std::string c = " --config " + cfg.string();
  REQUIRE(cli("generate" + c).code == 0);
  CHECK(fs::exists(dir / "run/data/train/manifest.json"));
  CHECK(fs::exists(dir / "run/data/test/manifest.json"));
  REQUIRE(cli("train --stage 1" + c).code == 0);
  REQUIRE(cli("train --stage 2" + c).code == 0);
  auto e = cli("eval" + c);
  REQUIRE(e.code == 0);
  auto rep = nlohmann::json::parse(slurp(dir / "run/eval/report.json"));
  CHECK(std::isfinite(rep["mpjpe_mm"].get<double>()));
  CHECK(rep["pa_mpjpe_mm"].get<double>() <= rep["mpjpe_mm"].get<double>() + 1e-9);
  CHECK(rep["count"] == 8);
  auto csv = slurp(dir / "run/eval/report.csv");
  CHECK(csv.rfind("category,count,mpjpe_mm,pa_mpjpe_mm\noverall,8,", 0) == 0);
  CHECK(fs::exists(dir / "run/eval/cdf.csv"));
  CHECK(fs::exists(dir / "run/eval/cdf.svg"));

  auto i = cli("inspect" + c + " --index 2 --checkpoint " + (dir / "run/checkpoints/stage2.ckpt").string());
  REQUIRE(i.code == 0);
  int ppm = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "run")) ppm += entry.path().extension() == ".ppm";
  CHECK(ppm > 4);
}

TEST_CASE("seeded pipeline reruns reproduce their outputs") {
  auto dir = temp_dir("repeat");
  auto run_once = [&](const std::string& name) {
    auto cfg = write_config(dir, small_config(dir / name, 1));
    const std::string c = " --config " + cfg.string() + " --deterministic";
    REQUIRE(cli("generate" + c).code == 0);
    REQUIRE(cli("train --stage 1" + c).code == 0);
    REQUIRE(cli("train --stage 2" + c).code == 0);
    REQUIRE(cli("eval" + c).code == 0);
    return std::array<std::string, 4>{slurp(dir / name / "logs/stage1.jsonl"), slurp(dir / name / "logs/stage2.jsonl"),
                                      slurp(dir / name / "eval/report.csv"), slurp(dir / name / "data/test/manifest.json")};
  };
  auto a = run_once("a");
  auto b = run_once("b");
  CHECK_FALSE(a[0].empty());
  CHECK(a[0] == b[0]);
  CHECK(a[1] == b[1]);
  CHECK(a[2] == b[2]);
  // Re-running into the same directory leaves the outputs unchanged.
  auto again = run_once("a");
  CHECK(again[2] == a[2]);
  CHECK(again[3] == a[3]);

  // --seed overrides the config.
  auto cfg = write_config(dir, small_config(dir / "c", 1));
  REQUIRE(cli("generate --config " + cfg.string() + " --seed 9").code == 0);
  CHECK(slurp(dir / "c/data/test/manifest.json") != a[3]);
}
