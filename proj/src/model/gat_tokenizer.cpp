#include "vtformer/model/gat_tokenizer.hpp"

#include <cmath>

#include "vtformer/errors.hpp"

namespace vtformer::model {

using num::Tensor;
using num::Var;

RelativeTrajectory relative_trajectory(const Tensor& observed) {
  if (observed.rank() != 2 || observed.cols() != 2 || observed.rows() < 1) {
    throw ShapeError("relative_trajectory: expected T x 2 coordinates, got " +
                     num::shape_string(observed.shape()));
  }
  Tensor out({observed.rows(), 2});
  for (std::size_t k = 0; k < observed.rows(); ++k) {
    out(k, 0) = observed(k, 0) - observed(0, 0);
    out(k, 1) = observed(k, 1) - observed(0, 1);
  }
  return {std::move(out)};
}

GatWeights GatWeights::bind(num::Tape& tape, const num::ParamStore& store, const ModelConfig& cfg) {
  GatWeights w;
  w.expand_w = tape.param(store, "gat.expand.weight");
  w.expand_b = tape.param(store, "gat.expand.bias");
  w.beta = tape.param(store, "gat.node.beta");
  w.node_w0 = tape.param(store, "gat.node.w0");
  w.node_b0 = tape.param(store, "gat.node.b0");
  w.node_w1 = tape.param(store, "gat.node.w1");
  w.node_b1 = tape.param(store, "gat.node.b1");
  w.neighbor_w2 = tape.param(store, "gat.neighbor.w2");
  w.neighbor_b2 = tape.param(store, "gat.neighbor.b2");
  w.channel_w1 = tape.param(store, "gat.channel.w1");
  w.channel_b1 = tape.param(store, "gat.channel.b1");
  w.channel_w2 = tape.param(store, "gat.channel.w2");
  w.channel_b2 = tape.param(store, "gat.channel.b2");
  w.spatial_w = tape.param(store, "gat.spatial.weight");
  w.spatial_b = tape.param(store, "gat.spatial.bias");
  w.token_w = tape.param(store, "gat.token.weight");
  w.token_b = tape.param(store, "gat.token.bias");
  w.t_oh = static_cast<std::size_t>(cfg.t_oh);
  w.slope = cfg.leaky_slope;
  if (w.expand_w.value().shape() != num::Shape{4 * w.t_oh, kFeatureChannels * w.t_oh}) {
    throw ConfigError("tokenizer parameters do not match T_OH = " + std::to_string(cfg.t_oh));
  }
  return w;
}

void init_gat_params(num::ParamStore& store, const ModelConfig& cfg, num::Rng& rng) {
  const auto t = static_cast<std::size_t>(cfg.t_oh);
  const std::size_t wide = kFeatureChannels * t;
  const std::size_t hidden = cfg.channel_hidden();
  const auto d = static_cast<std::size_t>(cfg.d_model);
  auto affine = [&](const std::string& weight, const std::string& bias, std::size_t in,
                    std::size_t out) {
    store.add(weight, num::xavier_uniform(in, out, rng));
    store.add(bias, Tensor({1, out}));
  };
  affine("gat.expand.weight", "gat.expand.bias", 4 * t, wide);
  store.add("gat.node.beta", Tensor::scalar(1.0));
  affine("gat.node.w0", "gat.node.b0", wide, wide);
  affine("gat.node.w1", "gat.node.b1", wide, wide);
  affine("gat.neighbor.w2", "gat.neighbor.b2", wide, wide);
  affine("gat.channel.w1", "gat.channel.b1", kFeatureChannels, hidden);
  affine("gat.channel.w2", "gat.channel.b2", hidden, kFeatureChannels);
  affine("gat.spatial.weight", "gat.spatial.bias", 2, 1);
  affine("gat.token.weight", "gat.token.bias", kTokenInputWidth, d);
}

Tensor node_features(const Tensor& observed, const Tensor& relative) {
  const std::size_t t = observed.rows();
  if (relative.shape() != observed.shape()) {
    throw ShapeError("node_features: observed " + num::shape_string(observed.shape()) +
                     " vs relative " + num::shape_string(relative.shape()));
  }
  Tensor f({1, 4 * t});
  for (std::size_t k = 0; k < t; ++k) {
    f[4 * k + 0] = observed(k, 0);
    f[4 * k + 1] = observed(k, 1);
    f[4 * k + 2] = relative(k, 0);
    f[4 * k + 3] = relative(k, 1);
  }
  return f;
}

Var expand_features(const GatWeights& w, const Tensor& observed, const Tensor& relative) {
  Var f = w.expand_w.tape().constant(node_features(observed, relative));
  return num::leaky_relu(num::add_bias(num::matmul(f, w.expand_w), w.expand_b), w.slope);
}

Var aggregate_node(const GatWeights& w, Var e_v) {
  Var scaled = num::scale_by(e_v, w.beta);
  Var hidden = num::leaky_relu(num::add_bias(num::matmul(scaled, w.node_w0), w.node_b0), w.slope);
  return num::leaky_relu(num::add_bias(num::matmul(hidden, w.node_w1), w.node_b1), w.slope);
}

namespace {

// Shared two-layer MLP of the channel attention.
Var channel_mlp(const GatWeights& w, Var pooled) {
  Var h = num::leaky_relu(num::add_bias(num::matmul(pooled, w.channel_w1), w.channel_b1), w.slope);
  return num::add_bias(num::matmul(h, w.channel_w2), w.channel_b2);
}

}  // namespace

Var aggregate_neighbor(const GatWeights& w, Var e_u) {
  Var projected =
      num::leaky_relu(num::add_bias(num::matmul(e_u, w.neighbor_w2), w.neighbor_b2), w.slope);
  Var map = num::reshape(projected, w.t_oh, kFeatureChannels);

  Var channel_logits =
      num::add(channel_mlp(w, num::mean_over_rows(map)), channel_mlp(w, num::max_over_rows(map)));
  Var gated = num::mul_rows_by(map, num::sigmoid(channel_logits));

  const Var pooled[] = {num::mean_over_cols(gated), num::max_over_cols(gated)};
  Var spatial_logits = num::add_bias(num::matmul(num::concat_cols(pooled), w.spatial_w), w.spatial_b);
  Var attended = num::mul_cols_by(gated, num::sigmoid(spatial_logits));

  return num::reshape(num::add(attended, map), 1, kFeatureChannels * w.t_oh);
}

std::vector<Var> graph_aggregate(const GatWeights& w, std::span<const Var> features) {
  if (features.empty()) throw ConfigError("graph_aggregate: scene has no vehicles");
  std::vector<Var> neighbor;
  neighbor.reserve(features.size());
  if (features.size() > 1) {
    for (Var e : features) neighbor.push_back(aggregate_neighbor(w, e));
  }
  std::vector<Var> out;
  out.reserve(features.size());
  for (std::size_t v = 0; v < features.size(); ++v) {
    Var g = aggregate_node(w, features[v]);
    for (std::size_t u = 0; u < features.size(); ++u) {
      if (u != v) g = num::add(g, neighbor[u]);
    }
    out.push_back(g);
  }
  return out;
}

Tensor temporal_encoding(std::size_t length, std::size_t d_model, std::size_t first_position) {
  if (d_model % 2 != 0) {
    throw ConfigError("temporal encoding needs an even d_model, got " + std::to_string(d_model));
  }
  Tensor pe({length, d_model});
  for (std::size_t r = 0; r < length; ++r) {
    const auto pos = static_cast<double>(first_position + r);
    for (std::size_t i = 0; i < d_model / 2; ++i) {
      const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d_model));
      pe(r, 2 * i) = std::sin(pos / freq);
      pe(r, 2 * i + 1) = std::cos(pos / freq);
    }
  }
  return pe;
}

std::vector<Var> tokenize(const GatWeights& w, const data::SceneWindow& scene,
                          const ModelConfig& cfg, const Normalizer& norm) {
  if (scene.vehicles.empty()) throw ConfigError("tokenize: scene " + scene.scene_id + " is empty");
  num::Tape& tape = w.expand_w.tape();
  const std::size_t t = w.t_oh;

  std::vector<Tensor> relative;
  std::vector<Var> features;
  for (const auto& vehicle : scene.vehicles) {
    if (vehicle.observed.rows() != t) {
      throw ConfigError("scene " + scene.scene_id + " has T_OH = " +
                        std::to_string(vehicle.observed.rows()) + ", model expects " +
                        std::to_string(t));
    }
    Tensor observed = vehicle.observed;
    for (std::size_t k = 0; k < t; ++k) {
      observed(k, 0) = (observed(k, 0) - norm.origin_x) / norm.position_scale;
      observed(k, 1) = (observed(k, 1) - norm.origin_y) / norm.position_scale;
    }
    Tensor rel = relative_trajectory(vehicle.observed).values;
    for (double& v : rel.data()) v /= norm.relative_scale;
    features.push_back(expand_features(w, observed, rel));
    relative.push_back(std::move(rel));
  }

  const std::vector<Var> aggregated = graph_aggregate(w, features);
  Var encoding = tape.constant(temporal_encoding(t, static_cast<std::size_t>(cfg.d_model)));
  std::vector<Var> tokens;
  tokens.reserve(aggregated.size());
  for (std::size_t v = 0; v < aggregated.size(); ++v) {
    const Var parts[] = {num::reshape(aggregated[v], t, kFeatureChannels),
                         tape.constant(relative[v])};
    Var projected = num::add_bias(num::matmul(num::concat_cols(parts), w.token_w), w.token_b);
    tokens.push_back(num::add(projected, encoding));
  }
  return tokens;
}

}  // namespace vtformer::model
