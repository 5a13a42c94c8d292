#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtformer/datahub/windows.hpp"
#include "vtformer/metrics/metrics.hpp"
#include "vtformer/model/vtformer.hpp"

namespace vtformer::train {

struct TrainConfig {
  int epochs = 80;
  double lr = 0.01;
  double weight_decay = 0.0005;
  double dropout = 0.2;
  int batch_size = 16;
  int t_oh = 15;
  int t_ph = 25;
  std::uint64_t seed = 0;
  int d_model = 24;
  int layers = 8;
  int heads = 4;
  int ffn = 256;
  // 0 evaluates only after the last epoch.
  int eval_every = 0;
  int rate_hz = 5;
  // Fit the input/target scaling on the training split; identity otherwise.
  bool normalize = true;

  model::ModelConfig model_config() const;
};

void validate(const TrainConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
// Keys missing from `j` keep their defaults; unknown keys raise ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);

// "LH", "MH", "SH" for T_OH 15, 10, 5; "T_OH=<n>" otherwise.
std::string horizon_label(int t_oh);

// Mean over all components of the squared difference.
num::Var mse_loss(num::Var pred, const num::Tensor& target);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double seconds = 0.0;
  std::optional<metrics::MetricsReport> eval;
};

nlohmann::json to_json(const EpochRecord& e);

struct RunRecord {
  std::vector<EpochRecord> epochs;
  std::string config_hash;
  std::filesystem::path final_checkpoint;
  std::filesystem::path best_checkpoint;
  std::optional<double> best_eval_ade;
};

struct TrainResult {
  RunRecord record;
  model::VtFormer model;
};

// Files written when `output_dir` is non-empty: run.jsonl (one line per
// epoch, flushed as it goes), final.ckpt.json and best.ckpt.json.
struct TrainOutputs {
  std::filesystem::path output_dir;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Throws DivergenceError carrying the global batch index when a loss or
// gradient stops being finite.
TrainResult train(std::span<const data::SceneWindow> train_set,
                  std::span<const data::SceneWindow> eval_set, const TrainConfig& cfg,
                  const TrainOutputs& outputs = {});

// Mean observed per-step displacement, extrapolated from the last point.
std::vector<model::PredictedTrajectory> baseline_constant_velocity(const data::SceneWindow& scene);
// Last observed position held for the whole horizon.
std::vector<model::PredictedTrajectory> baseline_constant_position(const data::SceneWindow& scene);

metrics::ScenePredictor as_predictor(
    std::function<std::vector<model::PredictedTrajectory>(const data::SceneWindow&)> f);

struct SweepRow {
  std::string label;
  int t_oh = 0;
  metrics::MetricsReport report;
  RunRecord record;
};

// Dataset (train and eval split) for one observation horizon.
using SweepData = std::function<data::Split(int t_oh)>;

// Trains and evaluates T_OH = 15, 10, 5 with everything else from `base`.
// Per-horizon artifacts go to output_dir/<label>/ when output_dir is set.
std::vector<SweepRow> horizon_sweep(const SweepData& datasets, const TrainConfig& base,
                                    const std::filesystem::path& output_dir = {});

// "model,ADE,FDE,<marks...>,Params" followed by one row per horizon.
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace vtformer::train
