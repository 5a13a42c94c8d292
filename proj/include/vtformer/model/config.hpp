#pragma once

#include <cstddef>
#include <span>

#include <json.hpp>

#include "vtformer/datahub/windows.hpp"

namespace vtformer::model {

// Per-step features (x, y, dx, dy) expanded by a factor of two.
inline constexpr std::size_t kFeatureChannels = 8;
// Feature-map channels plus the re-attached relative trajectory.
inline constexpr std::size_t kTokenInputWidth = kFeatureChannels + 2;

struct ModelConfig {
  int t_oh = 15;
  int t_ph = 25;
  int d_model = 24;
  int layers = 8;
  int heads = 4;
  int ffn = 256;
  double dropout = 0.2;
  double leaky_slope = 0.01;
  int channel_reduction = 4;

  std::size_t head_dim() const { return static_cast<std::size_t>(d_model / heads); }
  std::size_t channel_hidden() const {
    return kFeatureChannels / static_cast<std::size_t>(channel_reduction);
  }
};

void validate(const ModelConfig& cfg);
nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

// Affine input/target scaling fitted on the training split. Positions enter
// the network as (p - origin) / position_scale, the relative trajectory as
// dC / relative_scale and per-step displacements as
// (d - delta_mean) / delta_scale. The default is the identity map.
struct Normalizer {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double position_scale = 1.0;
  double relative_scale = 1.0;
  double delta_mean_x = 0.0;
  double delta_mean_y = 0.0;
  double delta_scale = 1.0;

  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

Normalizer fit_normalizer(std::span<const data::SceneWindow> windows);
nlohmann::json to_json(const Normalizer& n);
Normalizer normalizer_from_json(const nlohmann::json& j);

}  // namespace vtformer::model
