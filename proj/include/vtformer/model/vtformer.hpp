#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "vtformer/datahub/windows.hpp"
#include "vtformer/model/config.hpp"
#include "vtformer/model/gat_tokenizer.hpp"
#include "vtformer/model/predictor.hpp"
#include "vtformer/numkit/param_store.hpp"

namespace vtformer::model {

// Total scalar count across all named tensors.
std::size_t count_params(const num::ParamStore& params);

// Scalar count of a freshly initialised model with this configuration.
std::size_t count_params(const ModelConfig& cfg);

class VtFormer {
 public:
  VtFormer(const ModelConfig& cfg, std::uint64_t seed);
  VtFormer(const ModelConfig& cfg, const Normalizer& norm, num::ParamStore params);

  const ModelConfig& config() const { return config_; }
  const Normalizer& normalizer() const { return normalizer_; }
  void set_normalizer(const Normalizer& norm) { normalizer_ = norm; }
  num::ParamStore& params() { return params_; }
  const num::ParamStore& params() const { return params_; }
  std::size_t param_count() const { return count_params(params_); }

  // Teacher-forced outputs for every vehicle of `scene`, in model units, on
  // a caller-owned tape. Parameters are bound once per call.
  std::vector<num::Var> forward_scene(num::Tape& tape, const data::SceneWindow& scene,
                                      const Dropout& dropout = {}) const;

  // Ground-truth per-step displacements in model units, one per vehicle.
  std::vector<num::Tensor> target_deltas(const data::SceneWindow& scene) const;

  // Greedy autoregressive forecast for every vehicle of `scene`.
  std::vector<PredictedTrajectory> predict(const data::SceneWindow& scene) const;

  nlohmann::json metadata() const;
  std::string config_hash() const;
  void save(const std::filesystem::path& path, nlohmann::json extra = nlohmann::json::object()) const;
  static VtFormer load(const std::filesystem::path& path);

 private:
  void check_scene(const data::SceneWindow& scene) const;

  ModelConfig config_;
  Normalizer normalizer_;
  num::ParamStore params_;
};

}  // namespace vtformer::model
