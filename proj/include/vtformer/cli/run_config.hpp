#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtformer/datahub/windows.hpp"
#include "vtformer/trainer/trainer.hpp"

namespace vtformer::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "VTFORMER_OUTPUT_DIR";

// On-disk run configuration with "data", "model", "train" and "output"
// sections. Horizons live in "data"; the trainer copy is kept in sync.
struct RunConfig {
  std::filesystem::path data_path;
  data::DatasetConfig data;
  train::TrainConfig train;
  std::filesystem::path output_dir;
  std::vector<std::string> formats{"json", "csv"};
};

// Defaults throughout; output_dir from the environment or "vtformer_out".
RunConfig canonical_run_config();

nlohmann::json to_json(const RunConfig& cfg);
// Unknown keys, a missing or wrong schema_version and invalid values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const data::DatasetConfig& cfg);
// Applies the keys of `j` on top of `base`.
data::DatasetConfig dataset_config_from_json(const nlohmann::json& j, data::DatasetConfig base = {});

// Reads tracks from a CSV file, or from a directory written by `prepare`
// (whose manifest fixes the format and rate), then downsamples and windows.
std::vector<data::SceneWindow> load_windows(const std::filesystem::path& path,
                                            data::DatasetConfig cfg);
data::Split load_split(const std::filesystem::path& path, const data::DatasetConfig& cfg);

}  // namespace vtformer::cli
