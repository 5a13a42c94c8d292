#pragma once

#include <span>
#include <vector>

#include "vtformer/datahub/windows.hpp"
#include "vtformer/model/config.hpp"
#include "vtformer/numkit/ops.hpp"
#include "vtformer/numkit/random.hpp"

// Graph attentive tokenization: every vehicle of a scene becomes one node of
// a fully connected graph, and one propagation step turns each node into a
// T_OH x d_model token sequence for the predictor.
namespace vtformer::model {

// Displacements from the first observed position; row 0 is always (0, 0).
struct RelativeTrajectory {
  num::Tensor values;  // T_OH x 2
};

RelativeTrajectory relative_trajectory(const num::Tensor& observed);

// Tokenizer parameters bound to one tape. Checkpoint names carry the "gat." prefix.
struct GatWeights {
  num::Var expand_w, expand_b;            // 4T -> 8T
  num::Var beta;                          // node gain
  num::Var node_w0, node_b0;              // 8T -> 8T
  num::Var node_w1, node_b1;              // 8T -> 8T
  num::Var neighbor_w2, neighbor_b2;      // 8T -> 8T
  num::Var channel_w1, channel_b1;        // 8 -> 8 / reduction
  num::Var channel_w2, channel_b2;        // 8 / reduction -> 8
  num::Var spatial_w, spatial_b;          // 2 -> 1
  num::Var token_w, token_b;              // 10 -> d_model
  std::size_t t_oh = 0;
  double slope = num::kDefaultLeakySlope;

  static GatWeights bind(num::Tape& tape, const num::ParamStore& store, const ModelConfig& cfg);
};

void init_gat_params(num::ParamStore& store, const ModelConfig& cfg, num::Rng& rng);

// Per-step (x, y, dx, dy) flattened to 1 x 4T, expanded to 1 x 8T.
num::Tensor node_features(const num::Tensor& observed, const num::Tensor& relative);
num::Var expand_features(const GatWeights& w, const num::Tensor& observed,
                         const num::Tensor& relative);

// E'_v = act(W1 act(W0 (beta E_v) + B0) + B1)
num::Var aggregate_node(const GatWeights& w, num::Var e_v);

// E'_u = act(W2 E_u + B2), viewed as a T x 8 map; channel gates then temporal
// gates, with a residual back to E'_u.
num::Var aggregate_neighbor(const GatWeights& w, num::Var e_u);

// G_v = aggregate_node(E_v) + sum over u != v of aggregate_neighbor(E_u).
std::vector<num::Var> graph_aggregate(const GatWeights& w, std::span<const num::Var> features);

// Sinusoidal table for positions first_position .. first_position + length - 1.
num::Tensor temporal_encoding(std::size_t length, std::size_t d_model,
                              std::size_t first_position = 0);

// Full pipeline for one scene; one T_OH x d_model token sequence per vehicle,
// in scene order.
std::vector<num::Var> tokenize(const GatWeights& w, const data::SceneWindow& scene,
                               const ModelConfig& cfg, const Normalizer& norm = {});

}  // namespace vtformer::model
