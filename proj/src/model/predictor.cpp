#include "vtformer/model/predictor.hpp"

#include <cmath>
#include <string>

#include "vtformer/errors.hpp"
#include "vtformer/model/gat_tokenizer.hpp"

namespace vtformer::model {

using num::Tensor;
using num::Var;

namespace {

std::string layer_prefix(std::size_t l) { return "tp.layer" + std::to_string(l) + "."; }

}  // namespace

PredictorWeights PredictorWeights::bind(num::Tape& tape, const num::ParamStore& store,
                                        const ModelConfig& cfg) {
  PredictorWeights w;
  w.d_model = static_cast<std::size_t>(cfg.d_model);
  w.slope = cfg.leaky_slope;
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = layer_prefix(static_cast<std::size_t>(l));
    LayerWeights layer;
    for (int h = 0; h < cfg.heads; ++h) {
      const std::string hp = p + "head" + std::to_string(h) + ".";
      layer.heads.push_back({tape.param(store, hp + "wq"), tape.param(store, hp + "wk"),
                             tape.param(store, hp + "wv")});
    }
    layer.wo = tape.param(store, p + "wo");
    layer.ffn_w3 = tape.param(store, p + "ffn.w3");
    layer.ffn_b3 = tape.param(store, p + "ffn.b3");
    layer.ffn_w4 = tape.param(store, p + "ffn.w4");
    layer.ffn_b4 = tape.param(store, p + "ffn.b4");
    layer.norm1_gain = tape.param(store, p + "norm1.gain");
    layer.norm1_bias = tape.param(store, p + "norm1.bias");
    layer.norm2_gain = tape.param(store, p + "norm2.gain");
    layer.norm2_bias = tape.param(store, p + "norm2.bias");
    w.layers.push_back(std::move(layer));
  }
  w.embed_w = tape.param(store, "tp.embed.weight");
  w.embed_b = tape.param(store, "tp.embed.bias");
  w.head_w = tape.param(store, "tp.head.weight");
  w.head_b = tape.param(store, "tp.head.bias");
  if (w.embed_w.value().cols() != w.d_model) {
    throw ConfigError("predictor parameters do not match d_model = " + std::to_string(cfg.d_model));
  }
  return w;
}

void init_predictor_params(num::ParamStore& store, const ModelConfig& cfg, num::Rng& rng) {
  const auto d = static_cast<std::size_t>(cfg.d_model);
  const std::size_t dk = cfg.head_dim();
  const auto ffn = static_cast<std::size_t>(cfg.ffn);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string p = layer_prefix(static_cast<std::size_t>(l));
    for (int h = 0; h < cfg.heads; ++h) {
      const std::string hp = p + "head" + std::to_string(h) + ".";
      store.add(hp + "wq", num::xavier_uniform(d, dk, rng));
      store.add(hp + "wk", num::xavier_uniform(d, dk, rng));
      store.add(hp + "wv", num::xavier_uniform(d, dk, rng));
    }
    store.add(p + "wo", num::xavier_uniform(dk * static_cast<std::size_t>(cfg.heads), d, rng));
    store.add(p + "ffn.w3", num::xavier_uniform(d, ffn, rng));
    store.add(p + "ffn.b3", Tensor({1, ffn}));
    store.add(p + "ffn.w4", num::xavier_uniform(ffn, d, rng));
    store.add(p + "ffn.b4", Tensor({1, d}));
    store.add(p + "norm1.gain", Tensor({1, d}, 1.0));
    store.add(p + "norm1.bias", Tensor({1, d}));
    store.add(p + "norm2.gain", Tensor({1, d}, 1.0));
    store.add(p + "norm2.bias", Tensor({1, d}));
  }
  store.add("tp.embed.weight", num::xavier_uniform(2, d, rng));
  store.add("tp.embed.bias", Tensor({1, d}));
  store.add("tp.head.weight", num::xavier_uniform(d, 2, rng));
  store.add("tp.head.bias", Tensor({1, 2}));
}

Var attention(Var q, Var k, Var v, const CausalMask& mask) {
  const std::size_t length = q.rows();
  if (k.rows() != length || v.rows() != length || mask.length != length) {
    throw ShapeError("attention: sequence lengths disagree");
  }
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Var logits = num::scale(num::matmul(q, num::transpose(k)), inv_sqrt_dk);
  return num::matmul(num::softmax_rows(num::causal_mask(logits)), v);
}

Var multi_head_attention(const LayerWeights& layer, Var x, const CausalMask& mask) {
  std::vector<Var> heads;
  heads.reserve(layer.heads.size());
  for (const HeadWeights& h : layer.heads) {
    heads.push_back(attention(num::matmul(x, h.wq), num::matmul(x, h.wk), num::matmul(x, h.wv), mask));
  }
  return num::matmul(num::concat_cols(heads), layer.wo);
}

Var decoder_layer(const LayerWeights& layer, Var x, const CausalMask& mask, const Dropout& dropout,
                  double slope) {
  Var attended = dropout.apply(multi_head_attention(layer, x, mask));
  Var a = num::layer_norm(num::add(x, attended), layer.norm1_gain, layer.norm1_bias);
  Var hidden = num::leaky_relu(num::add_bias(num::matmul(a, layer.ffn_w3), layer.ffn_b3), slope);
  Var ffn = dropout.apply(num::add_bias(num::matmul(hidden, layer.ffn_w4), layer.ffn_b4));
  return num::layer_norm(num::add(a, ffn), layer.norm2_gain, layer.norm2_bias);
}

Var decoder_stack(const PredictorWeights& w, Var x, const Dropout& dropout) {
  const CausalMask mask{x.rows()};
  for (const LayerWeights& layer : w.layers) x = decoder_layer(layer, x, mask, dropout, w.slope);
  return x;
}

Var embed_deltas(const PredictorWeights& w, const Tensor& deltas, std::size_t first_position) {
  num::Tape& tape = w.embed_w.tape();
  Var projected = num::add_bias(num::matmul(tape.constant(deltas), w.embed_w), w.embed_b);
  return num::add(projected,
                  tape.constant(temporal_encoding(deltas.rows(), w.d_model, first_position)));
}

Tensor future_deltas(const Tensor& future, double last_x, double last_y) {
  Tensor out({future.rows(), 2});
  double px = last_x, py = last_y;
  for (std::size_t k = 0; k < future.rows(); ++k) {
    out(k, 0) = future(k, 0) - px;
    out(k, 1) = future(k, 1) - py;
    px = future(k, 0);
    py = future(k, 1);
  }
  return out;
}

Var forward_teacher_forced(const PredictorWeights& w, Var tokens, const Tensor& target_deltas,
                           const Dropout& dropout) {
  const std::size_t t_oh = tokens.rows();
  const std::size_t t_ph = target_deltas.rows();
  if (t_oh < 1 || t_ph < 1) throw ShapeError("forward_teacher_forced: empty horizon");
  const Var parts[] = {tokens, embed_deltas(w, target_deltas, t_oh)};
  Var hidden = decoder_stack(w, num::concat_rows(parts), dropout);
  Var read = num::slice_rows(hidden, t_oh - 1, t_ph);
  return num::add_bias(num::matmul(read, w.head_w), w.head_b);
}

PredictedTrajectory generate(const num::ParamStore& params, const ModelConfig& cfg,
                             const Tensor& tokens, double last_x, double last_y, std::size_t t_ph,
                             const Normalizer& norm, Tensor* model_deltas) {
  const std::size_t t_oh = tokens.rows();
  Tensor raw({t_ph, 2});
  for (std::size_t step = 0; step < t_ph; ++step) {
    num::Tape tape(num::GradMode::kInference);
    const PredictorWeights w = PredictorWeights::bind(tape, params, cfg);
    Var sequence = tape.constant(tokens);
    if (step > 0) {
      Tensor so_far({step, 2}, std::vector<double>(raw.data().begin(), raw.data().begin() + 2 * step));
      const Var parts[] = {sequence, embed_deltas(w, so_far, t_oh)};
      sequence = num::concat_rows(parts);
    }
    Var hidden = decoder_stack(w, sequence, {});
    Var last = num::slice_rows(hidden, hidden.rows() - 1, 1);
    const Tensor out = num::add_bias(num::matmul(last, w.head_w), w.head_b).value();
    raw(step, 0) = out[0];
    raw(step, 1) = out[1];
  }

  PredictedTrajectory result{Tensor({t_ph, 2}), Tensor({t_ph, 2})};
  double px = last_x, py = last_y;
  for (std::size_t k = 0; k < t_ph; ++k) {
    result.deltas(k, 0) = raw(k, 0) * norm.delta_scale + norm.delta_mean_x;
    result.deltas(k, 1) = raw(k, 1) * norm.delta_scale + norm.delta_mean_y;
    px += result.deltas(k, 0);
    py += result.deltas(k, 1);
    result.positions(k, 0) = px;
    result.positions(k, 1) = py;
  }
  if (model_deltas) *model_deltas = std::move(raw);
  return result;
}

}  // namespace vtformer::model
