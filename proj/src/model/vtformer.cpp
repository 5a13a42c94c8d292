#include "vtformer/model/vtformer.hpp"

#include "vtformer/errors.hpp"
#include "vtformer/numkit/checkpoint.hpp"
#include "vtformer/numkit/random.hpp"

namespace vtformer::model {

using num::Tensor;
using num::Var;

std::size_t count_params(const num::ParamStore& params) { return params.scalar_count(); }

std::size_t count_params(const ModelConfig& cfg) { return VtFormer(cfg, 0).param_count(); }

VtFormer::VtFormer(const ModelConfig& cfg, std::uint64_t seed) : config_(cfg) {
  validate(config_);
  num::Rng rng(seed);
  init_gat_params(params_, config_, rng);
  init_predictor_params(params_, config_, rng);
}

VtFormer::VtFormer(const ModelConfig& cfg, const Normalizer& norm, num::ParamStore params)
    : config_(cfg), normalizer_(norm), params_(std::move(params)) {
  validate(config_);
}

void VtFormer::check_scene(const data::SceneWindow& scene) const {
  if (scene.vehicles.empty()) throw ConfigError("scene " + scene.scene_id + " has no vehicles");
  if (scene.t_oh() != static_cast<std::size_t>(config_.t_oh)) {
    throw ConfigError("scene " + scene.scene_id + " has T_OH = " + std::to_string(scene.t_oh()) +
                      " but the model was built for T_OH = " + std::to_string(config_.t_oh));
  }
}

std::vector<Tensor> VtFormer::target_deltas(const data::SceneWindow& scene) const {
  std::vector<Tensor> out;
  out.reserve(scene.vehicles.size());
  for (const auto& v : scene.vehicles) {
    const std::size_t last = v.observed.rows() - 1;
    Tensor d = future_deltas(v.future, v.observed(last, 0), v.observed(last, 1));
    for (std::size_t k = 0; k < d.rows(); ++k) {
      d(k, 0) = (d(k, 0) - normalizer_.delta_mean_x) / normalizer_.delta_scale;
      d(k, 1) = (d(k, 1) - normalizer_.delta_mean_y) / normalizer_.delta_scale;
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Var> VtFormer::forward_scene(num::Tape& tape, const data::SceneWindow& scene,
                                         const Dropout& dropout) const {
  check_scene(scene);
  const GatWeights gat = GatWeights::bind(tape, params_, config_);
  const PredictorWeights tp = PredictorWeights::bind(tape, params_, config_);
  const std::vector<Var> tokens = tokenize(gat, scene, config_, normalizer_);
  const std::vector<Tensor> targets = target_deltas(scene);
  std::vector<Var> out;
  out.reserve(tokens.size());
  for (std::size_t v = 0; v < tokens.size(); ++v) {
    out.push_back(forward_teacher_forced(tp, tokens[v], targets[v], dropout));
  }
  return out;
}

std::vector<PredictedTrajectory> VtFormer::predict(const data::SceneWindow& scene) const {
  check_scene(scene);
  std::vector<Tensor> tokens;
  {
    num::Tape tape(num::GradMode::kInference);
    const GatWeights gat = GatWeights::bind(tape, params_, config_);
    for (const Var& t : tokenize(gat, scene, config_, normalizer_)) tokens.push_back(t.value());
  }
  const auto t_ph = static_cast<std::size_t>(config_.t_ph);
  std::vector<PredictedTrajectory> out;
  out.reserve(tokens.size());
  for (std::size_t v = 0; v < tokens.size(); ++v) {
    const Tensor& obs = scene.vehicles[v].observed;
    const std::size_t last = obs.rows() - 1;
    out.push_back(generate(params_, config_, tokens[v], obs(last, 0), obs(last, 1), t_ph,
                           normalizer_));
  }
  return out;
}

nlohmann::json VtFormer::metadata() const {
  return {{"model", to_json(config_)}, {"normalizer", to_json(normalizer_)}};
}

std::string VtFormer::config_hash() const { return num::fnv1a_hex(to_json(config_).dump()); }

void VtFormer::save(const std::filesystem::path& path, nlohmann::json extra) const {
  nlohmann::json meta = metadata();
  if (!extra.is_object()) throw ConfigError("checkpoint metadata must be a JSON object");
  for (auto it = extra.begin(); it != extra.end(); ++it) meta[it.key()] = it.value();
  num::save_checkpoint(path, params_, meta, config_hash());
}

VtFormer VtFormer::load(const std::filesystem::path& path) {
  num::Checkpoint ck = num::load_checkpoint(path);
  try {
    const ModelConfig cfg = model_config_from_json(ck.metadata.at("model"));
    const Normalizer norm = normalizer_from_json(ck.metadata.at("normalizer"));
    return VtFormer(cfg, norm, std::move(ck.params));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": malformed model metadata: " + e.what());
  }
}

}  // namespace vtformer::model
