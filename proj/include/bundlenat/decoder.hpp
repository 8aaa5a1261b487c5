#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bundlenat/autodiff.hpp"
#include "bundlenat/config.hpp"

namespace bundlenat {

// Registers dec.<block>.self.*, dec.<block>.cross.*, dec.<block>.{w1,w2},
// dec.proj.{wo,bo}. Decoder FFN width is d (as the equations state).
void init_decoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Decoding start: column means of the encoder output (the copy mechanism).
Var copy_from_encoder(Ctx& ctx, const Var& xf);

// Self-attention specialized to one token; the softmax over the single logit
// is identically 1, so the value/mix path alone determines the output.
Var one_token_attention(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& h, int block);

// h' queries the encoder rows, which provide keys and values; output is 1 x d.
Var cross_attention(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& h, const Var& xf,
                    int block);

Var decoder_ffn(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& h, int block);

// copy -> depth x (one-token attention -> cross-attention -> FFN).
Var decoder_stack(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& xf);

// h_o = sigmoid(h_d W_o + b_o), one probability per vocabulary item.
Var project(Ctx& ctx, ParamStore& ps, const Var& h_d);

struct PredictionDistribution {
    Tensor h_o;                          // 1 x N, entries in (0,1)
    std::vector<std::uint8_t> candidate_mask;  // N flags; inference reads only true ones
};

// Top-k masked items by (score desc, id asc); never returns duplicates or
// non-candidates.
std::vector<int> infer_bundle(const PredictionDistribution& dist, int k);

struct DecodeResult {
    PredictionDistribution dist;
    std::vector<int> bundle;
    int decoder_passes = 0;
};

// One-shot decode: exactly one decoder pass regardless of k.
DecodeResult decode(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& xf,
                    const std::vector<int>& candidate_ids, int k);

// Evaluation stub that reuses the same parameters but selects one item per
// decoder pass (k passes per bundle); the latency comparison baseline.
DecodeResult decode_autoregressive_stub(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& xf,
                                        const std::vector<int>& candidate_ids, int k);

}  // namespace bundlenat
