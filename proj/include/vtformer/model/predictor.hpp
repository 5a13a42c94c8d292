#pragma once

#include <vector>

#include "vtformer/model/config.hpp"
#include "vtformer/numkit/ops.hpp"
#include "vtformer/numkit/random.hpp"

// Decoder-only transformer over [observation tokens | embedded future steps].
// The head emits per-step displacements; absolute positions are their
// cumulative sum from the last observed point.
namespace vtformer::model {

// Position q may attend to key k iff k <= q.
struct CausalMask {
  std::size_t length = 0;
  bool admissible(std::size_t q, std::size_t k) const { return k <= q; }
};

struct HeadWeights {
  num::Var wq, wk, wv;  // d_model -> d_k
};

struct LayerWeights {
  std::vector<HeadWeights> heads;
  num::Var wo;  // heads * d_k -> d_model
  num::Var ffn_w3, ffn_b3, ffn_w4, ffn_b4;
  num::Var norm1_gain, norm1_bias, norm2_gain, norm2_bias;
};

// Checkpoint names: "tp.layer{l}.*", "tp.embed.*", "tp.head.*".
struct PredictorWeights {
  std::vector<LayerWeights> layers;
  num::Var embed_w, embed_b;  // 2 -> d_model
  num::Var head_w, head_b;    // d_model -> 2
  std::size_t d_model = 0;
  double slope = num::kDefaultLeakySlope;

  static PredictorWeights bind(num::Tape& tape, const num::ParamStore& store,
                               const ModelConfig& cfg);
};

void init_predictor_params(num::ParamStore& store, const ModelConfig& cfg, num::Rng& rng);

// Inverted dropout applied after attention and after the FFN when active.
struct Dropout {
  double rate = 0.0;
  num::Rng* rng = nullptr;
  bool active() const { return rate > 0.0 && rng != nullptr; }
  num::Var apply(num::Var x) const { return active() ? num::dropout(x, rate, *rng) : x; }
};

// softmax(Q K^T / sqrt(d_k) + mask) V
num::Var attention(num::Var q, num::Var k, num::Var v, const CausalMask& mask);
num::Var multi_head_attention(const LayerWeights& layer, num::Var x, const CausalMask& mask);
// Post-norm residual block with a Leaky ReLU FFN.
num::Var decoder_layer(const LayerWeights& layer, num::Var x, const CausalMask& mask,
                       const Dropout& dropout, double slope = num::kDefaultLeakySlope);
num::Var decoder_stack(const PredictorWeights& w, num::Var x, const Dropout& dropout);

// Embeds n x 2 displacements at sequence positions first_position ...
num::Var embed_deltas(const PredictorWeights& w, const num::Tensor& deltas,
                      std::size_t first_position);

// Per-step displacements of `future` (T_PH x 2), starting from the last observed point.
num::Tensor future_deltas(const num::Tensor& future, double last_x, double last_y);

// Teacher-forced pass over T_OH + T_PH positions. `target_deltas` are in
// model units. Returns T_PH x 2 predicted displacements read at positions
// T_OH - 1 .. T_OH + T_PH - 2.
num::Var forward_teacher_forced(const PredictorWeights& w, num::Var tokens,
                                const num::Tensor& target_deltas, const Dropout& dropout = {});

struct PredictedTrajectory {
  num::Tensor positions;  // T_PH x 2, absolute
  num::Tensor deltas;     // T_PH x 2, per-step displacement
};

// Greedy autoregressive decoding without dropout. Model-unit displacements
// are mapped back through `norm` before accumulation from the last observed
// point. `model_deltas`, when given, receives the raw model-unit outputs.
PredictedTrajectory generate(const num::ParamStore& params, const ModelConfig& cfg,
                             const num::Tensor& tokens, double last_x, double last_y,
                             std::size_t t_ph, const Normalizer& norm = {},
                             num::Tensor* model_deltas = nullptr);

}  // namespace vtformer::model
