#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "vtformer/cli/commands.hpp"
#include "vtformer/cli/run_config.hpp"
#include "vtformer/model/vtformer.hpp"

using namespace vtformer;
using nlohmann::json;
using vtformer::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result vt(std::vector<std::string> args) {
  args.insert(args.begin(), "vtformer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

void write(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// Small, fast run config over `data`.
json tiny_run_config(const fs::path& data, const fs::path& out, int t_oh = 15) {
  return {{"schema_version", 1},
          {"data", {{"path", data.string()}, {"t_oh", t_oh}, {"t_ph", 25}, {"split_fraction", 0.7}}},
          {"model", {{"d_model", 8}, {"layers", 1}, {"heads", 2}, {"ffn", 16}}},
          {"train", {{"epochs", 2}, {"batch_size", 4}, {"seed", 5}}},
          {"output", {{"directory", out.string()}}}};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(vt({}).code, cli::kExitUsage);
  EXPECT_EQ(vt({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(vt({"train"}).code, cli::kExitUsage);
  EXPECT_EQ(vt({"--help"}).code, cli::kExitOk);
}

TEST(Cli, ConfigPrintsCanonicalValues) {
  const Result r = vt({"config"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("data").at("t_oh"), 15);
  EXPECT_EQ(j.at("data").at("t_ph"), 25);
  EXPECT_EQ(j.at("data").at("target_rate_hz"), 5);
  EXPECT_EQ(j.at("model").at("layers"), 8);
  EXPECT_EQ(j.at("model").at("heads"), 4);
  EXPECT_EQ(j.at("model").at("ffn"), 256);
  EXPECT_DOUBLE_EQ(j.at("model").at("dropout").get<double>(), 0.2);
  EXPECT_EQ(j.at("train").at("epochs"), 80);
  EXPECT_DOUBLE_EQ(j.at("train").at("lr").get<double>(), 0.01);
  EXPECT_DOUBLE_EQ(j.at("train").at("weight_decay").get<double>(), 0.0005);
  EXPECT_EQ(j.at("train").at("batch_size"), 16);
  // The printed config parses back to itself.
  EXPECT_EQ(cli::to_json(cli::run_config_from_json(j)), j);
}

TEST(Cli, OutputDirectoryFromEnvironment) {
  ::setenv(cli::kOutputDirEnv, "/tmp/vtformer_env_out", 1);
  const json j = cli::to_json(cli::canonical_run_config());
  ::unsetenv(cli::kOutputDirEnv);
  EXPECT_EQ(j.at("output").at("directory"), "/tmp/vtformer_env_out");
  EXPECT_EQ(cli::to_json(cli::canonical_run_config()).at("output").at("directory"), "vtformer_out");
}

TEST(Cli, GenSyntheticIsDeterministic) {
  const fs::path a = scratch_dir("gen_a"), b = scratch_dir("gen_b");
  ASSERT_EQ(vt({"gen-synthetic", "--scenario", "constant_velocity", "--scenes", "10", "--seed", "4", "--out",
                a.string()}).code,
            0);
  ASSERT_EQ(vt({"gen-synthetic", "--scenario", "constant_velocity", "--scenes", "10", "--seed", "4", "--out",
                b.string()}).code,
            0);
  EXPECT_EQ(slurp(a / "tracks.csv"), slurp(b / "tracks.csv"));
  EXPECT_EQ(slurp(a / "synthetic.json"), slurp(b / "synthetic.json"));
  const json meta = read_json(a / "synthetic.json");
  ASSERT_EQ(meta.at("windows").size(), 10u);
  for (const auto& w : meta.at("windows")) EXPECT_EQ(w.at("vehicles").size(), 3u);
  // 10 scenes x 3 vehicles x 40 steps plus a header.
  EXPECT_EQ(count_lines(slurp(a / "tracks.csv")), 1u + 10 * 3 * 40);
}

TEST(Cli, GenSyntheticCarFollowingKeepsGaps) {
  const fs::path dir = scratch_dir("gen_cf");
  ASSERT_EQ(vt({"gen-synthetic", "--scenario", "car_following", "--scenes", "3", "--out", dir.string()}).code, 0);
  data::DatasetConfig cfg;
  const auto windows = cli::load_windows(dir, cfg);
  ASSERT_EQ(windows.size(), 3u);
  for (const auto& w : windows) {
    for (std::size_t v = 1; v < w.vehicles.size(); ++v) {
      for (std::size_t k = 0; k < 25; ++k) {
        EXPECT_GT(w.vehicles[v - 1].future(k, 0) - w.vehicles[v].future(k, 0), 0.0);
      }
    }
  }
}

TEST(Cli, GenSyntheticRejectsUnknownScenario) {
  const Result r = vt({"gen-synthetic", "--scenario", "teleport", "--out", scratch_dir("gen_bad").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("teleport"), std::string::npos);
}

TEST(Cli, PrepareNgsimFeetAtTenHertz) {
  const fs::path dir = scratch_dir("prep");
  std::ostringstream src;
  src << "Vehicle_ID,Frame_ID,Local_X,Local_Y\n";
  for (int id = 1; id <= 2; ++id)
    for (int f = 1; f <= 80; ++f) src << id << "," << f << "," << 12 * id << "," << 5.0 * f << "\n";
  write(dir / "ngsim.csv", src.str());
  json cfg = tiny_run_config("", dir / "unused");
  cfg["data"]["native_rate_hz"] = 10;
  cfg["data"]["source_format"] = "ngsim";
  cfg["data"].erase("path");
  write(dir / "cfg.json", cfg.dump());

  for (const char* out : {"out1", "out2"}) {
    const Result r = vt({"prepare", "--input", (dir / "ngsim.csv").string(), "--format", "ngsim", "--config",
                         (dir / "cfg.json").string(), "--out", (dir / out).string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const json m = read_json(dir / "out1" / "manifest.json");
  EXPECT_EQ(m.at("unit"), "meters");
  EXPECT_EQ(m.at("downsample_stride"), 2);
  EXPECT_EQ(m.at("native_rate_hz"), 10);
  EXPECT_EQ(m.at("target_rate_hz"), 5);
  EXPECT_EQ(m.at("n_windows"), 1);
  EXPECT_EQ(slurp(dir / "out1" / "manifest.json"), slurp(dir / "out2" / "manifest.json"));
  EXPECT_EQ(slurp(dir / "out1" / "tracks.csv"), slurp(dir / "out2" / "tracks.csv"));

  // The prepared directory loads back as metric, 5 Hz data.
  data::DatasetConfig dc;
  const auto windows = cli::load_windows(dir / "out1", dc);
  ASSERT_EQ(windows.size(), 1u);
  const auto& v = windows[0].vehicles[0];
  EXPECT_NEAR(v.observed(1, 1) - v.observed(0, 1), 2 * 5.0 * 0.3048, 1e-9);
  EXPECT_NEAR(v.observed(0, 0), 12 * 0.3048, 1e-9);
}

TEST(Cli, TrainEchoesConfigAndWritesArtifacts) {
  const fs::path dir = scratch_dir("train");
  ASSERT_EQ(vt({"gen-synthetic", "--scenes", "6", "--out", (dir / "data").string()}).code, 0);
  write(dir / "cfg.json", tiny_run_config("data", dir / "run").dump());
  const Result r = vt({"train", "--config", (dir / "cfg.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"weight_decay\": 0.0005"), std::string::npos);
  EXPECT_NE(r.out.find("\"lr\": 0.01"), std::string::npos);
  EXPECT_NE(r.out.find("label: LH"), std::string::npos);
  for (const char* f : {"config.json", "run.jsonl", "final.ckpt.json", "best.ckpt.json", "metrics.json",
                        "metrics.csv", "rmse_vs_horizon.csv"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  EXPECT_EQ(count_lines(slurp(dir / "run" / "run.jsonl")), 2u);
  const std::string csv = slurp(dir / "run" / "metrics.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "ADE,FDE,1s,2s,3s,4s,5s,Params");
}

TEST(Cli, TrainFailsBeforeTrainingOnMissingData) {
  const fs::path dir = scratch_dir("train_missing");
  write(dir / "cfg.json", tiny_run_config(dir / "nope", dir / "run").dump());
  const Result r = vt({"train", "--config", (dir / "cfg.json").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_FALSE(fs::exists(dir / "run" / "run.jsonl"));
  EXPECT_EQ(r.err.find("epoch"), std::string::npos);
}

TEST(Cli, ConfigValidation) {
  const fs::path dir = scratch_dir("cfg_bad");
  json cfg = tiny_run_config(dir, dir / "run");
  cfg["train"]["momentum"] = 0.9;
  write(dir / "unknown.json", cfg.dump());
  EXPECT_EQ(vt({"train", "--config", (dir / "unknown.json").string()}).code, cli::kExitUsage);

  cfg = tiny_run_config(dir, dir / "run");
  cfg["schema_version"] = 2;
  write(dir / "version.json", cfg.dump());
  const Result r = vt({"train", "--config", (dir / "version.json").string()});
  EXPECT_EQ(r.code, cli::kExitUsage);
  EXPECT_NE(r.err.find("schema_version"), std::string::npos);

  write(dir / "broken.json", "{ not json");
  EXPECT_EQ(vt({"train", "--config", (dir / "broken.json").string()}).code, cli::kExitUsage);
  EXPECT_EQ(vt({"train", "--config", (dir / "absent.json").string()}).code, cli::kExitUsage);
}

TEST(Cli, EvalZeroHeadOnStationaryData) {
  const fs::path dir = scratch_dir("eval_zero");
  // Stationary vehicles, written as a prepared directory at 5 Hz.
  std::vector<data::SceneWindow> windows(2);
  for (std::size_t s = 0; s < 2; ++s) {
    windows[s].scene_id = std::to_string(s) + "/0";
    for (int v = 0; v < 2; ++v) {
      data::VehicleWindow vw;
      vw.vehicle_id = v;
      vw.observed = num::Tensor({15, 2}, 3.0 * v + static_cast<double>(s));
      vw.future = num::Tensor({25, 2}, 3.0 * v + static_cast<double>(s));
      windows[s].vehicles.push_back(vw);
    }
  }
  fs::create_directories(dir / "data");
  data::save_canonical_csv(dir / "data" / "tracks.csv", data::tracks_from_windows(windows));
  write(dir / "data" / "manifest.json", json{{"target_rate_hz", 5}}.dump());

  model::ModelConfig mc;
  mc.d_model = 8;
  mc.layers = 1;
  mc.heads = 2;
  mc.ffn = 16;
  model::VtFormer net(mc, 1);
  net.params().at("tp.head.weight").value.fill(0.0);
  net.params().at("tp.head.bias").value.fill(0.0);
  net.save(dir / "zero.ckpt.json");

  const Result r = vt({"eval", "--checkpoint", (dir / "zero.ckpt.json").string(), "--data",
                       (dir / "data").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json m = read_json(dir / "out" / "metrics.json");
  EXPECT_EQ(m.at("ade"), 0.0);
  EXPECT_EQ(m.at("fde"), 0.0);
  EXPECT_EQ(m.at("params"), net.param_count());
  ASSERT_EQ(m.at("rmse_at").size(), 5u);
  const std::string plot = slurp(dir / "out" / "rmse_vs_horizon.csv");
  EXPECT_EQ(count_lines(plot), 6u);
  EXPECT_EQ(plot.substr(0, plot.find('\n')), "seconds,rmse");

  const Result p = vt({"predict", "--checkpoint", (dir / "zero.ckpt.json").string(), "--data",
                       (dir / "data").string(), "--out", (dir / "out").string()});
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(count_lines(slurp(dir / "out" / "predictions.csv")), 1u + 2 * 2 * 25);

  // A data config whose horizons differ from the checkpoint is refused.
  json cfg = tiny_run_config(dir / "data", dir / "out", 10);
  write(dir / "mismatch.json", cfg.dump());
  const Result bad = vt({"eval", "--checkpoint", (dir / "zero.ckpt.json").string(), "--data",
                         (dir / "data").string(), "--config", (dir / "mismatch.json").string()});
  EXPECT_EQ(bad.code, cli::kExitUsage);
  EXPECT_NE(bad.err.find("T_OH"), std::string::npos);
}

TEST(Cli, EvalRejectsCorruptCheckpoint) {
  const fs::path dir = scratch_dir("eval_corrupt");
  write(dir / "bad.ckpt.json", "{\"format\": 7}");
  ASSERT_EQ(vt({"gen-synthetic", "--scenes", "2", "--out", (dir / "data").string()}).code, 0);
  const Result r = vt({"eval", "--checkpoint", (dir / "bad.ckpt.json").string(), "--data",
                       (dir / "data").string(), "--out", (dir / "out").string()});
  EXPECT_EQ(r.code, cli::kExitData);
}

TEST(Cli, SweepWritesThreeRows) {
  const fs::path dir = scratch_dir("sweep");
  ASSERT_EQ(vt({"gen-synthetic", "--scenes", "4", "--out", (dir / "data").string()}).code, 0);
  json cfg = tiny_run_config("data", dir / "run");
  cfg["train"]["epochs"] = 1;
  write(dir / "cfg.json", cfg.dump());
  const Result r = vt({"sweep", "--config", (dir / "cfg.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "run" / "sweep.csv");
  EXPECT_EQ(count_lines(csv), 4u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,ADE,FDE,1s,2s,3s,4s,5s,Params");
  for (const char* label : {"\nLH,", "\nMH,", "\nSH,"}) EXPECT_NE(csv.find(label), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "run" / "SH" / "final.ckpt.json"));
}
