#include "vtformer/cli/run_config.hpp"

#include <cstdlib>
#include <fstream>

#include "vtformer/errors.hpp"

namespace vtformer::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& section) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool found = false;
    for (const char* k : known) found = found || it.key() == k;
    if (!found) throw ConfigError("unknown key '" + it.key() + "' in config section '" + section + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

std::filesystem::path default_output_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("vtformer_out");
}

}  // namespace

RunConfig canonical_run_config() {
  RunConfig cfg;
  cfg.output_dir = default_output_dir();
  return cfg;
}

json to_json(const data::DatasetConfig& cfg) {
  return {{"source_format", data::to_string(cfg.source_format)},
          {"native_rate_hz", cfg.native_rate_hz},
          {"target_rate_hz", cfg.target_rate_hz},
          {"t_oh", cfg.t_oh},
          {"t_ph", cfg.t_ph},
          {"stride", cfg.stride},
          {"split_fraction", cfg.split_fraction},
          {"seed", cfg.seed},
          {"columns",
           {{"scene", cfg.columns.scene},
            {"vehicle_id", cfg.columns.vehicle_id},
            {"frame", cfg.columns.frame},
            {"x", cfg.columns.x},
            {"y", cfg.columns.y}}}};
}

data::DatasetConfig dataset_config_from_json(const json& j, data::DatasetConfig cfg) {
  reject_unknown(j,
                 {"path", "source_format", "native_rate_hz", "target_rate_hz", "t_oh", "t_ph", "stride",
                  "split_fraction", "seed", "columns"},
                 "data");
  try {
    if (j.contains("source_format")) {
      cfg.source_format = data::parse_source_format(j.at("source_format").get<std::string>());
      cfg.columns = data::default_columns(cfg.source_format);
    }
    read(j, "native_rate_hz", cfg.native_rate_hz);
    read(j, "target_rate_hz", cfg.target_rate_hz);
    read(j, "t_oh", cfg.t_oh);
    read(j, "t_ph", cfg.t_ph);
    read(j, "stride", cfg.stride);
    read(j, "split_fraction", cfg.split_fraction);
    read(j, "seed", cfg.seed);
    if (j.contains("columns")) {
      const json& c = j.at("columns");
      reject_unknown(c, {"scene", "vehicle_id", "frame", "x", "y"}, "data.columns");
      read(c, "scene", cfg.columns.scene);
      read(c, "vehicle_id", cfg.columns.vehicle_id);
      read(c, "frame", cfg.columns.frame);
      read(c, "x", cfg.columns.x);
      read(c, "y", cfg.columns.y);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("data config: ") + e.what());
  }
  data::validate(cfg);
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json d = to_json(cfg.data);
  d["path"] = cfg.data_path.string();
  const train::TrainConfig& t = cfg.train;
  return {{"schema_version", kSchemaVersion},
          {"data", d},
          {"model",
           {{"d_model", t.d_model},
            {"layers", t.layers},
            {"heads", t.heads},
            {"ffn", t.ffn},
            {"dropout", t.dropout}}},
          {"train",
           {{"epochs", t.epochs},
            {"lr", t.lr},
            {"weight_decay", t.weight_decay},
            {"batch_size", t.batch_size},
            {"seed", t.seed},
            {"eval_every", t.eval_every},
            {"normalize", t.normalize}}},
          {"output", {{"directory", cfg.output_dir.string()}, {"formats", cfg.formats}}}};
}

RunConfig run_config_from_json(const json& j) {
  reject_unknown(j, {"schema_version", "data", "model", "train", "output"}, "<root>");
  if (!j.contains("schema_version")) throw ConfigError("config lacks schema_version");
  if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + j.at("schema_version").dump() + ", expected " +
                      std::to_string(kSchemaVersion));
  }
  RunConfig cfg = canonical_run_config();
  try {
    if (j.contains("data")) {
      const json& d = j.at("data");
      cfg.data = dataset_config_from_json(d, cfg.data);
      if (d.contains("path")) cfg.data_path = d.at("path").get<std::string>();
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(m, {"d_model", "layers", "heads", "ffn", "dropout"}, "model");
      read(m, "d_model", cfg.train.d_model);
      read(m, "layers", cfg.train.layers);
      read(m, "heads", cfg.train.heads);
      read(m, "ffn", cfg.train.ffn);
      read(m, "dropout", cfg.train.dropout);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t, {"epochs", "lr", "weight_decay", "batch_size", "seed", "eval_every", "normalize"},
                     "train");
      read(t, "epochs", cfg.train.epochs);
      read(t, "lr", cfg.train.lr);
      read(t, "weight_decay", cfg.train.weight_decay);
      read(t, "batch_size", cfg.train.batch_size);
      read(t, "seed", cfg.train.seed);
      read(t, "eval_every", cfg.train.eval_every);
      read(t, "normalize", cfg.train.normalize);
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      reject_unknown(o, {"directory", "formats"}, "output");
      if (o.contains("directory")) cfg.output_dir = o.at("directory").get<std::string>();
      read(o, "formats", cfg.formats);
      for (const auto& f : cfg.formats) {
        if (f != "json" && f != "csv") throw ConfigError("unknown report format '" + f + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  cfg.train.t_oh = cfg.data.t_oh;
  cfg.train.t_ph = cfg.data.t_ph;
  cfg.train.rate_hz = cfg.data.target_rate_hz;
  train::validate(cfg.train);
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  RunConfig cfg = run_config_from_json(j);
  // Relative data paths are resolved against the config file's directory.
  if (!cfg.data_path.empty() && cfg.data_path.is_relative()) {
    cfg.data_path = path.parent_path() / cfg.data_path;
  }
  return cfg;
}

std::vector<data::SceneWindow> load_windows(const std::filesystem::path& path, data::DatasetConfig cfg) {
  if (path.empty()) throw ParseError("no dataset path given");
  std::filesystem::path csv = path;
  if (std::filesystem::is_directory(path)) {
    const auto manifest_path = path / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw ParseError(path.string() + " has no manifest.json");
    try {
      const json manifest = json::parse(in);
      cfg.source_format = data::SourceFormat::kCanonical;
      cfg.columns = data::default_columns(cfg.source_format);
      cfg.native_rate_hz = manifest.at("target_rate_hz").get<int>();
    } catch (const json::exception& e) {
      throw ParseError(manifest_path.string() + ": " + e.what());
    }
    csv = path / "tracks.csv";
  } else if (!std::filesystem::exists(path)) {
    throw ParseError("dataset " + path.string() + " does not exist");
  }
  data::validate(cfg);
  const data::TrackTable table = data::load_tracks(csv, cfg.source_format, cfg.columns);
  const std::vector<data::TrackPoint> points =
      data::downsample(table.points, cfg.native_rate_hz, cfg.target_rate_hz);
  std::vector<data::SceneWindow> windows = data::window_scenes(points, cfg, table.unit);
  if (windows.empty()) {
    throw ParseError(path.string() + ": no scene window of " + std::to_string(cfg.t_oh + cfg.t_ph) +
                     " steps found");
  }
  return windows;
}

data::Split load_split(const std::filesystem::path& path, const data::DatasetConfig& cfg) {
  const std::vector<data::SceneWindow> windows = load_windows(path, cfg);
  return data::split(windows, cfg.split_fraction, cfg.seed);
}

}  // namespace vtformer::cli
