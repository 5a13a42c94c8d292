#include "vtformer/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "vtformer/errors.hpp"
#include "vtformer/numkit/checkpoint.hpp"
#include "vtformer/numkit/random.hpp"

namespace vtformer::train {

using num::Tensor;
using num::Var;

model::ModelConfig TrainConfig::model_config() const {
  model::ModelConfig m;
  m.t_oh = t_oh;
  m.t_ph = t_ph;
  m.d_model = d_model;
  m.layers = layers;
  m.heads = heads;
  m.ffn = ffn;
  m.dropout = dropout;
  return m;
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("epochs must be positive");
  if (!(cfg.lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(cfg.weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
  if (cfg.eval_every < 0) throw ConfigError("eval_every must be non-negative");
  if (cfg.rate_hz < 1) throw ConfigError("rate_hz must be positive");
  model::validate(cfg.model_config());
}

nlohmann::json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},       {"lr", cfg.lr},
          {"weight_decay", cfg.weight_decay}, {"dropout", cfg.dropout},
          {"batch_size", cfg.batch_size}, {"t_oh", cfg.t_oh},
          {"t_ph", cfg.t_ph},           {"seed", cfg.seed},
          {"d_model", cfg.d_model},     {"layers", cfg.layers},
          {"heads", cfg.heads},         {"ffn", cfg.ffn},
          {"eval_every", cfg.eval_every}, {"rate_hz", cfg.rate_hz},
          {"normalize", cfg.normalize}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  TrainConfig cfg;
  const nlohmann::json defaults = to_json(cfg);
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!defaults.contains(it.key())) throw ConfigError("unknown train config key: " + it.key());
  }
  try {
    auto read = [&j](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
    };
    read("epochs", cfg.epochs);
    read("lr", cfg.lr);
    read("weight_decay", cfg.weight_decay);
    read("dropout", cfg.dropout);
    read("batch_size", cfg.batch_size);
    read("t_oh", cfg.t_oh);
    read("t_ph", cfg.t_ph);
    read("seed", cfg.seed);
    read("d_model", cfg.d_model);
    read("layers", cfg.layers);
    read("heads", cfg.heads);
    read("ffn", cfg.ffn);
    read("eval_every", cfg.eval_every);
    read("rate_hz", cfg.rate_hz);
    read("normalize", cfg.normalize);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

std::string horizon_label(int t_oh) {
  switch (t_oh) {
    case 15: return "LH";
    case 10: return "MH";
    case 5: return "SH";
    default: return "T_OH=" + std::to_string(t_oh);
  }
}

Var mse_loss(Var pred, const Tensor& target) {
  return num::mse(pred, pred.tape().constant(target));
}

nlohmann::json to_json(const EpochRecord& e) {
  nlohmann::json j = {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"seconds", e.seconds}};
  if (e.eval) j["eval"] = metrics::to_json(*e.eval);
  return j;
}

namespace {

// Distinct streams for batch order and dropout masks.
constexpr std::uint64_t kShuffleStream = 0x5eed0001;
constexpr std::uint64_t kDropoutStream = 0x5eed0002;

}  // namespace

TrainResult train(std::span<const data::SceneWindow> train_set,
                  std::span<const data::SceneWindow> eval_set, const TrainConfig& cfg,
                  const TrainOutputs& outputs) {
  validate(cfg);
  if (train_set.empty()) throw ConfigError("training set is empty");

  model::VtFormer net(cfg.model_config(), cfg.seed);
  if (cfg.normalize) net.set_normalizer(model::fit_normalizer(train_set));

  RunRecord record;
  record.config_hash = num::fnv1a_hex(to_json(cfg).dump());

  std::ofstream jsonl;
  const bool write_files = !outputs.output_dir.empty();
  if (write_files) {
    std::filesystem::create_directories(outputs.output_dir);
    jsonl.open(outputs.output_dir / "run.jsonl", std::ios::trunc);
    if (!jsonl) throw ConfigError("cannot write " + (outputs.output_dir / "run.jsonl").string());
    record.final_checkpoint = outputs.output_dir / "final.ckpt.json";
    record.best_checkpoint = outputs.output_dir / "best.ckpt.json";
  }
  const nlohmann::json extra = {{"train", to_json(cfg)}, {"train_config_hash", record.config_hash}};

  num::Rng shuffle_rng(cfg.seed ^ kShuffleStream);
  num::Rng dropout_rng(cfg.seed ^ kDropoutStream);
  const model::Dropout dropout{cfg.dropout, &dropout_rng};
  const num::AdamOptions adam{cfg.lr, cfg.weight_decay};
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t batches_per_epoch = (train_set.size() + batch - 1) / batch;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order = num::permutation(train_set.size(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t vehicle_count = 0;

    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const std::size_t batch_id = static_cast<std::size_t>(epoch - 1) * batches_per_epoch + b;
      const std::size_t begin = b * batch;
      const std::size_t end = std::min(begin + batch, order.size());
      std::size_t batch_vehicles = 0;
      for (std::size_t i = begin; i < end; ++i) batch_vehicles += train_set[order[i]].vehicles.size();
      const double weight = 1.0 / static_cast<double>(batch_vehicles);

      for (std::size_t i = begin; i < end; ++i) {
        const data::SceneWindow& scene = train_set[order[i]];
        auto diverged = [&](const std::string& why) {
          return DivergenceError(why + " in epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(batch_id) + " (scene " + scene.scene_id + ")",
                                 batch_id);
        };
        num::Tape tape;
        Var scene_loss;
        try {
          const std::vector<Var> preds = net.forward_scene(tape, scene, dropout);
          const std::vector<Tensor> targets = net.target_deltas(scene);
          scene_loss = mse_loss(preds[0], targets[0]);
          for (std::size_t v = 1; v < preds.size(); ++v) {
            scene_loss = num::add(scene_loss, mse_loss(preds[v], targets[v]));
          }
        } catch (const NumericError& e) {
          throw diverged(std::string("forward pass failed (") + e.what() + ")");
        }
        const double value = scene_loss.value()[0];
        if (!std::isfinite(value)) throw diverged("loss became non-finite");
        loss_sum += value;
        vehicle_count += scene.vehicles.size();
        try {
          tape.backward(num::scale(scene_loss, weight));
        } catch (const NumericError& e) {
          throw diverged(std::string("backward pass failed (") + e.what() + ")");
        }
        tape.accumulate_into(net.params());
      }
      try {
        num::adam_step(net.params(), adam);
      } catch (const NumericError& e) {
        throw DivergenceError("gradient became non-finite in epoch " + std::to_string(epoch) +
                                  ", batch " + std::to_string(batch_id) + ": " + e.what(),
                              batch_id);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(vehicle_count);
    const bool last = epoch == cfg.epochs;
    const bool periodic = cfg.eval_every > 0 && epoch % cfg.eval_every == 0;
    if (!eval_set.empty() && (last || periodic)) {
      rec.eval = metrics::evaluate(net, eval_set, cfg.rate_hz);
      if (!record.best_eval_ade || rec.eval->ade < *record.best_eval_ade) {
        record.best_eval_ade = rec.eval->ade;
        if (write_files) net.save(record.best_checkpoint, extra);
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (write_files) {
      jsonl << to_json(rec).dump() << '\n';
      jsonl.flush();
    }
    if (outputs.on_epoch) outputs.on_epoch(rec);
    record.epochs.push_back(std::move(rec));
  }

  if (write_files) {
    net.save(record.final_checkpoint, extra);
    if (!record.best_eval_ade) net.save(record.best_checkpoint, extra);
  }
  return {std::move(record), std::move(net)};
}

namespace {

std::vector<model::PredictedTrajectory> extrapolate(const data::SceneWindow& scene, bool hold) {
  std::vector<model::PredictedTrajectory> out;
  for (const auto& v : scene.vehicles) {
    const std::size_t t_oh = v.observed.rows();
    const std::size_t t_ph = v.future.rows();
    if (!hold && t_oh < 2) throw ConfigError("constant-velocity baseline needs T_OH >= 2");
    const double lx = v.observed(t_oh - 1, 0), ly = v.observed(t_oh - 1, 1);
    double dx = 0.0, dy = 0.0;
    if (!hold) {
      const auto steps = static_cast<double>(t_oh - 1);
      dx = (lx - v.observed(0, 0)) / steps;
      dy = (ly - v.observed(0, 1)) / steps;
    }
    model::PredictedTrajectory p{Tensor({t_ph, 2}), Tensor({t_ph, 2})};
    for (std::size_t k = 0; k < t_ph; ++k) {
      p.deltas(k, 0) = dx;
      p.deltas(k, 1) = dy;
      p.positions(k, 0) = lx + dx * static_cast<double>(k + 1);
      p.positions(k, 1) = ly + dy * static_cast<double>(k + 1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<model::PredictedTrajectory> baseline_constant_velocity(const data::SceneWindow& scene) {
  return extrapolate(scene, false);
}

std::vector<model::PredictedTrajectory> baseline_constant_position(const data::SceneWindow& scene) {
  return extrapolate(scene, true);
}

metrics::ScenePredictor as_predictor(
    std::function<std::vector<model::PredictedTrajectory>(const data::SceneWindow&)> f) {
  return [f = std::move(f)](const data::SceneWindow& w) {
    std::vector<Tensor> out;
    for (auto& p : f(w)) out.push_back(std::move(p.positions));
    return out;
  };
}

std::vector<SweepRow> horizon_sweep(const SweepData& datasets, const TrainConfig& base,
                                    const std::filesystem::path& output_dir) {
  validate(base);
  std::vector<SweepRow> rows;
  for (int t_oh : {15, 10, 5}) {
    TrainConfig cfg = base;
    cfg.t_oh = t_oh;
    const data::Split split = datasets(t_oh);
    if (split.eval.empty()) throw ConfigError("sweep needs a non-empty eval split for T_OH = " + std::to_string(t_oh));
    SweepRow row;
    row.label = horizon_label(t_oh);
    row.t_oh = t_oh;
    TrainOutputs out;
    if (!output_dir.empty()) out.output_dir = output_dir / row.label;
    TrainResult result = train(split.train, split.eval, cfg, out);
    row.report = metrics::evaluate(result.model, split.eval, cfg.rate_hz);
    row.record = std::move(result.record);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  if (rows.empty()) return "";
  std::string out = "model," + metrics::csv_header(rows.front().report) + "\n";
  for (const auto& r : rows) out += r.label + "," + metrics::csv_row(r.report) + "\n";
  return out;
}

}  // namespace vtformer::train
