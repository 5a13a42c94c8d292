#include "vtformer/cli/commands.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vtformer/cli/run_config.hpp"
#include "vtformer/datahub/synthetic.hpp"
#include "vtformer/errors.hpp"
#include "vtformer/metrics/metrics.hpp"
#include "vtformer/numkit/checkpoint.hpp"
#include "vtformer/numkit/format.hpp"
#include "vtformer/trainer/trainer.hpp"

namespace vtformer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path default_output_dir() { return canonical_run_config().output_dir; }

json window_index(const std::vector<data::SceneWindow>& windows) {
  json list = json::array();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    json ids = json::array();
    for (const auto& v : windows[i].vehicles) ids.push_back(v.vehicle_id);
    list.push_back({{"index", i}, {"scene_id", windows[i].scene_id}, {"t0", windows[i].t0}, {"vehicles", ids}});
  }
  return list;
}

void write_reports(const fs::path& dir, const metrics::MetricsReport& report,
                   const std::vector<std::string>& formats) {
  for (const auto& f : formats) {
    if (f == "json") write_json(dir / "metrics.json", metrics::to_json(report));
    if (f == "csv") {
      write_text(dir / "metrics.csv", metrics::csv_header(report) + "\n" + metrics::csv_row(report) + "\n");
    }
  }
  write_text(dir / "rmse_vs_horizon.csv", metrics::rmse_plot_csv(report));
}

struct PrepareArgs {
  std::string input;
  std::string format = "canonical";
  std::string config;
  std::string out;
};

int cmd_prepare(const PrepareArgs& a, std::ostream& out) {
  data::DatasetConfig cfg;
  if (!a.config.empty()) {
    const RunConfig rc = load_run_config(a.config);
    cfg = rc.data;
  }
  const data::SourceFormat format = data::parse_source_format(a.format);
  if (a.config.empty() || format != cfg.source_format) cfg.columns = data::default_columns(format);
  cfg.source_format = format;
  data::validate(cfg);

  const data::TrackTable table = data::load_tracks(a.input, cfg.source_format, cfg.columns);
  data::TrackTable prepared{table.unit, data::downsample(table.points, cfg.native_rate_hz, cfg.target_rate_hz)};
  data::DatasetConfig windowed = cfg;
  windowed.native_rate_hz = cfg.target_rate_hz;
  const std::vector<data::SceneWindow> windows = data::window_scenes(prepared.points, windowed, table.unit);
  const data::SplitIndices split = data::split_indices(windows.size(), cfg.split_fraction, cfg.seed);

  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::ostringstream csv;
  data::write_canonical_csv(csv, prepared);
  write_text(dir / "tracks.csv", csv.str());
  write_json(dir / "windows.json", {{"t_oh", cfg.t_oh}, {"t_ph", cfg.t_ph}, {"windows", window_index(windows)}});
  const json manifest = {{"format", "vtformer-prepared"},
                         {"source", fs::path(a.input).filename().string()},
                         {"source_format", data::to_string(cfg.source_format)},
                         {"unit", data::to_string(table.unit)},
                         {"native_rate_hz", cfg.native_rate_hz},
                         {"target_rate_hz", cfg.target_rate_hz},
                         {"downsample_stride", cfg.downsample_factor()},
                         {"t_oh", cfg.t_oh},
                         {"t_ph", cfg.t_ph},
                         {"window_stride", cfg.effective_stride()},
                         {"split_fraction", cfg.split_fraction},
                         {"seed", cfg.seed},
                         {"n_points", prepared.points.size()},
                         {"n_windows", windows.size()},
                         {"tracks_fnv1a", num::fnv1a_hex(csv.str())},
                         {"train", split.train},
                         {"eval", split.eval}};
  write_json(dir / "manifest.json", manifest);
  out << "prepared " << windows.size() << " windows (" << split.train.size() << " train, "
      << split.eval.size() << " eval) from " << table.points.size() << " points into " << dir.string()
      << "\n";
  return kExitOk;
}

struct SyntheticArgs {
  std::string scenario = "constant_velocity";
  std::size_t scenes = 10;
  std::size_t vehicles = 3;
  std::uint64_t seed = 0;
  int rate = 5;
  int t_oh = 15;
  int t_ph = 25;
  double noise = 0.0;
  std::string out;
};

int cmd_gen_synthetic(const SyntheticArgs& a, std::ostream& out) {
  data::SyntheticConfig cfg;
  cfg.scenario = data::parse_scenario(a.scenario);
  cfg.n_scenes = a.scenes;
  cfg.vehicles_per_scene = a.vehicles;
  cfg.seed = a.seed;
  cfg.rate_hz = a.rate;
  cfg.t_oh = a.t_oh;
  cfg.t_ph = a.t_ph;
  cfg.noise_std = a.noise;
  const std::vector<data::SceneWindow> windows = data::generate_synthetic(cfg);

  const fs::path dir = a.out;
  std::ostringstream csv;
  data::write_canonical_csv(csv, data::tracks_from_windows(windows));
  write_text(dir / "tracks.csv", csv.str());
  write_json(dir / "synthetic.json", {{"format", "vtformer-synthetic"},
                                      {"config", data::to_json(cfg)},
                                      {"n_windows", windows.size()},
                                      {"windows", window_index(windows)}});
  write_json(dir / "manifest.json", {{"format", "vtformer-synthetic"},
                                     {"unit", "meters"},
                                     {"native_rate_hz", cfg.rate_hz},
                                     {"target_rate_hz", cfg.rate_hz},
                                     {"t_oh", cfg.t_oh},
                                     {"t_ph", cfg.t_ph},
                                     {"n_windows", windows.size()},
                                     {"tracks_fnv1a", num::fnv1a_hex(csv.str())}});
  out << "generated " << windows.size() << " " << a.scenario << " scenes into " << dir.string() << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::string out;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  const json effective = to_json(cfg);
  out << effective.dump(2) << "\n";
  out << "label: " << train::horizon_label(cfg.train.t_oh) << "\n";

  const data::Split split = load_split(cfg.data_path, cfg.data);
  if (split.train.empty()) throw ParseError("dataset has no training windows");
  fs::create_directories(cfg.output_dir);
  write_json(cfg.output_dir / "config.json", effective);

  train::TrainOutputs outputs;
  outputs.output_dir = cfg.output_dir;
  outputs.on_epoch = [&err](const train::EpochRecord& e) {
    err << "epoch " << e.epoch << " loss " << e.train_loss;
    if (e.eval) err << " eval_ade " << e.eval->ade;
    err << "\n";
  };
  const train::TrainResult result = train::train(split.train, split.eval, cfg.train, outputs);
  if (!split.eval.empty()) {
    const metrics::MetricsReport report = metrics::evaluate(result.model, split.eval, cfg.train.rate_hz);
    write_reports(cfg.output_dir, report, cfg.formats);
    out << metrics::to_json(report).dump(2) << "\n";
  }
  out << "final checkpoint: " << result.record.final_checkpoint.string() << "\n";
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string config;
  std::string out;
  std::string split = "all";
  int rate = 0;
};

std::vector<data::SceneWindow> eval_windows(const EvalArgs& a, const model::VtFormer& net) {
  data::DatasetConfig cfg;
  if (!a.config.empty()) {
    cfg = load_run_config(a.config).data;
    if (cfg.t_oh != net.config().t_oh || cfg.t_ph != net.config().t_ph) {
      throw ConfigError("checkpoint horizons (T_OH " + std::to_string(net.config().t_oh) + ", T_PH " +
                        std::to_string(net.config().t_ph) + ") do not match the data config (T_OH " +
                        std::to_string(cfg.t_oh) + ", T_PH " + std::to_string(cfg.t_ph) + ")");
    }
  }
  cfg.t_oh = net.config().t_oh;
  cfg.t_ph = net.config().t_ph;
  if (a.rate > 0) {
    cfg.target_rate_hz = a.rate;
    if (cfg.native_rate_hz % a.rate != 0) cfg.native_rate_hz = a.rate;
  }
  std::vector<data::SceneWindow> windows = load_windows(a.data, cfg);
  if (a.split == "all") return windows;
  data::Split s = data::split(windows, cfg.split_fraction, cfg.seed);
  std::vector<data::SceneWindow> chosen = a.split == "train" ? std::move(s.train) : std::move(s.eval);
  if (chosen.empty()) throw ParseError("the " + a.split + " split is empty");
  return chosen;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const model::VtFormer net = model::VtFormer::load(a.checkpoint);
  const std::vector<data::SceneWindow> windows = eval_windows(a, net);
  const metrics::MetricsReport report = metrics::evaluate(net, windows, windows.front().rate_hz);
  const fs::path dir = a.out.empty() ? default_output_dir() : fs::path(a.out);
  write_reports(dir, report, {"json", "csv"});
  out << metrics::to_json(report).dump(2) << "\n";
  return kExitOk;
}

int cmd_predict(const EvalArgs& a, std::ostream& out) {
  const model::VtFormer net = model::VtFormer::load(a.checkpoint);
  const std::vector<data::SceneWindow> windows = eval_windows(a, net);
  std::string csv = "scene_id,vehicle_id,step,seconds,x,y\n";
  for (const auto& w : windows) {
    const auto preds = net.predict(w);
    for (std::size_t v = 0; v < preds.size(); ++v) {
      for (std::size_t k = 0; k < preds[v].positions.rows(); ++k) {
        csv += w.scene_id + "," + std::to_string(w.vehicles[v].vehicle_id) + "," + std::to_string(k + 1) + "," +
               num::format_double(static_cast<double>(k + 1) / w.rate_hz) + "," +
               num::format_double(preds[v].positions(k, 0)) + "," +
               num::format_double(preds[v].positions(k, 1)) + "\n";
      }
    }
  }
  const fs::path path = (a.out.empty() ? default_output_dir() : fs::path(a.out)) / "predictions.csv";
  write_text(path, csv);
  out << "wrote " << path.string() << "\n";
  return kExitOk;
}

int cmd_sweep(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_run_config(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  out << to_json(cfg).dump(2) << "\n";
  const train::SweepData datasets = [&cfg](int t_oh) {
    data::DatasetConfig d = cfg.data;
    d.t_oh = t_oh;
    return load_split(cfg.data_path, d);
  };
  // Fail on unreadable data before any training starts.
  datasets(15);
  err << "sweeping T_OH over 15, 10, 5\n";
  const std::vector<train::SweepRow> rows = train::horizon_sweep(datasets, cfg.train, cfg.output_dir);
  const std::string csv = train::sweep_csv(rows);
  write_text(cfg.output_dir / "sweep.csv", csv);
  out << csv;
  return kExitOk;
}

int cmd_config(const std::string& path, std::ostream& out) {
  const json j = to_json(canonical_run_config());
  if (path.empty()) {
    out << j.dump(2) << "\n";
  } else {
    write_json(path, j);
    out << "wrote " << path << "\n";
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vehicle trajectory forecasting with a graph-tokenized transformer", "vtformer"};
  app.require_subcommand(1);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Downsample and window a trajectory file");
  prepare->add_option("--input", prep.input, "Track file (CSV or whitespace separated)")->required();
  prepare->add_option("--format", prep.format, "ngsim | chd | canonical")->capture_default_str();
  prepare->add_option("--config", prep.config, "Run config whose data section is applied");
  prepare->add_option("--out", prep.out, "Output directory")->required();

  SyntheticArgs syn;
  auto* gen = app.add_subcommand("gen-synthetic", "Generate a synthetic scene dataset");
  gen->add_option("--scenario", syn.scenario,
                  "constant_velocity | constant_acceleration | lane_change | car_following | curve")
      ->capture_default_str();
  gen->add_option("--scenes", syn.scenes)->capture_default_str();
  gen->add_option("--vehicles", syn.vehicles)->capture_default_str();
  gen->add_option("--seed", syn.seed)->capture_default_str();
  gen->add_option("--rate", syn.rate, "Sampling rate in Hz")->capture_default_str();
  gen->add_option("--t-oh", syn.t_oh)->capture_default_str();
  gen->add_option("--t-ph", syn.t_ph)->capture_default_str();
  gen->add_option("--noise", syn.noise, "Gaussian noise std in meters")->capture_default_str();
  gen->add_option("--out", syn.out, "Output directory")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a run config");
  train_cmd->add_option("--config", tr.config)->required();
  train_cmd->add_option("--out", tr.out, "Overrides output.directory");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* predict_cmd = app.add_subcommand("predict", "Write forecasts of a checkpoint as CSV");
  for (auto* c : {eval_cmd, predict_cmd}) {
    c->add_option("--checkpoint", ev.checkpoint)->required();
    c->add_option("--data", ev.data, "Track file or prepared directory")->required();
    c->add_option("--config", ev.config, "Run config whose data section is applied");
    c->add_option("--out", ev.out, "Output directory");
    c->add_option("--split", ev.split, "all | train | eval")
        ->check(CLI::IsMember({"all", "train", "eval"}))
        ->capture_default_str();
    c->add_option("--rate", ev.rate, "Target rate in Hz");
  }

  TrainArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Train and evaluate T_OH = 15, 10, 5");
  sweep->add_option("--config", sw.config)->required();
  sweep->add_option("--out", sw.out, "Overrides output.directory");

  std::string config_out;
  auto* config_cmd = app.add_subcommand("config", "Print the default run config");
  config_cmd->add_option("--out", config_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*prepare) return cmd_prepare(prep, out);
    if (*gen) return cmd_gen_synthetic(syn, out);
    if (*train_cmd) return cmd_train(tr, out, err);
    if (*eval_cmd) return cmd_eval(ev, out);
    if (*predict_cmd) return cmd_predict(ev, out);
    if (*sweep) return cmd_sweep(sw, out, err);
    if (*config_cmd) return cmd_config(config_out, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace vtformer::cli
