#include "vtformer/model/config.hpp"

#include <cmath>

#include "vtformer/errors.hpp"

namespace vtformer::model {

void validate(const ModelConfig& cfg) {
  if (cfg.t_oh < 1 || cfg.t_ph < 1) throw ConfigError("horizons must be positive");
  if (cfg.d_model < 2 || cfg.d_model % 2 != 0) {
    throw ConfigError("d_model must be even, got " + std::to_string(cfg.d_model));
  }
  if (cfg.heads < 1 || cfg.d_model % cfg.heads != 0) {
    throw ConfigError("d_model " + std::to_string(cfg.d_model) + " is not divisible by " +
                      std::to_string(cfg.heads) + " heads");
  }
  if (cfg.layers < 1 || cfg.ffn < 1) throw ConfigError("layers and ffn width must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(cfg.leaky_slope > 0.0 && cfg.leaky_slope < 1.0)) {
    throw ConfigError("leaky ReLU slope must lie in (0, 1)");
  }
  if (cfg.channel_reduction < 1 || kFeatureChannels % static_cast<std::size_t>(cfg.channel_reduction) != 0) {
    throw ConfigError("channel reduction must divide " + std::to_string(kFeatureChannels));
  }
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"t_oh", cfg.t_oh},         {"t_ph", cfg.t_ph},
          {"d_model", cfg.d_model},   {"layers", cfg.layers},
          {"heads", cfg.heads},       {"ffn", cfg.ffn},
          {"dropout", cfg.dropout},   {"leaky_slope", cfg.leaky_slope},
          {"channel_reduction", cfg.channel_reduction}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.t_oh = j.at("t_oh").get<int>();
  cfg.t_ph = j.at("t_ph").get<int>();
  cfg.d_model = j.at("d_model").get<int>();
  cfg.layers = j.at("layers").get<int>();
  cfg.heads = j.at("heads").get<int>();
  cfg.ffn = j.at("ffn").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.leaky_slope = j.at("leaky_slope").get<double>();
  cfg.channel_reduction = j.at("channel_reduction").get<int>();
  validate(cfg);
  return cfg;
}

Normalizer fit_normalizer(std::span<const data::SceneWindow> windows) {
  double sx = 0, sy = 0;
  std::size_t n_pos = 0;
  for (const auto& w : windows)
    for (const auto& v : w.vehicles)
      for (std::size_t k = 0; k < v.observed.rows(); ++k, ++n_pos) {
        sx += v.observed(k, 0);
        sy += v.observed(k, 1);
      }
  Normalizer n;
  if (n_pos == 0) return n;
  n.origin_x = sx / static_cast<double>(n_pos);
  n.origin_y = sy / static_cast<double>(n_pos);

  double mdx = 0, mdy = 0;
  std::size_t n_steps = 0;
  for (const auto& w : windows)
    for (const auto& v : w.vehicles) {
      double px = v.observed(v.observed.rows() - 1, 0), py = v.observed(v.observed.rows() - 1, 1);
      for (std::size_t k = 0; k < v.future.rows(); ++k, ++n_steps) {
        mdx += v.future(k, 0) - px;
        mdy += v.future(k, 1) - py;
        px = v.future(k, 0);
        py = v.future(k, 1);
      }
    }
  if (n_steps > 0) {
    n.delta_mean_x = mdx / static_cast<double>(n_steps);
    n.delta_mean_y = mdy / static_cast<double>(n_steps);
  }

  double pos_sq = 0, rel_sq = 0, delta_sq = 0;
  std::size_t n_rel = 0, n_delta = 0;
  for (const auto& w : windows) {
    for (const auto& v : w.vehicles) {
      const std::size_t t_oh = v.observed.rows();
      for (std::size_t k = 0; k < t_oh; ++k) {
        const double dx = v.observed(k, 0) - n.origin_x, dy = v.observed(k, 1) - n.origin_y;
        pos_sq += dx * dx + dy * dy;
        const double rx = v.observed(k, 0) - v.observed(0, 0);
        const double ry = v.observed(k, 1) - v.observed(0, 1);
        rel_sq += rx * rx + ry * ry;
        n_rel += 2;
      }
      double px = v.observed(t_oh - 1, 0), py = v.observed(t_oh - 1, 1);
      for (std::size_t k = 0; k < v.future.rows(); ++k) {
        const double dx = v.future(k, 0) - px - n.delta_mean_x;
        const double dy = v.future(k, 1) - py - n.delta_mean_y;
        delta_sq += dx * dx + dy * dy;
        n_delta += 2;
        px = v.future(k, 0);
        py = v.future(k, 1);
      }
    }
  }
  auto rms_or_one = [](double sq, std::size_t count) {
    const double r = count ? std::sqrt(sq / static_cast<double>(count)) : 0.0;
    return r > 1e-9 ? r : 1.0;
  };
  n.position_scale = rms_or_one(pos_sq, 2 * n_pos);
  n.relative_scale = rms_or_one(rel_sq, n_rel);
  n.delta_scale = rms_or_one(delta_sq, n_delta);
  return n;
}

nlohmann::json to_json(const Normalizer& n) {
  return {{"origin_x", n.origin_x},
          {"origin_y", n.origin_y},
          {"position_scale", n.position_scale},
          {"relative_scale", n.relative_scale},
          {"delta_mean_x", n.delta_mean_x},
          {"delta_mean_y", n.delta_mean_y},
          {"delta_scale", n.delta_scale}};
}

Normalizer normalizer_from_json(const nlohmann::json& j) {
  Normalizer n;
  n.origin_x = j.at("origin_x").get<double>();
  n.origin_y = j.at("origin_y").get<double>();
  n.position_scale = j.at("position_scale").get<double>();
  n.relative_scale = j.at("relative_scale").get<double>();
  n.delta_mean_x = j.at("delta_mean_x").get<double>();
  n.delta_mean_y = j.at("delta_mean_y").get<double>();
  n.delta_scale = j.at("delta_scale").get<double>();
  return n;
}

}  // namespace vtformer::model
