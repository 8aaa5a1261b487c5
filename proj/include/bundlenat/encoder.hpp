#pragma once

#include <string>
#include <vector>

#include "bundlenat/autodiff.hpp"
#include "bundlenat/config.hpp"
#include "bundlenat/instances.hpp"
#include "bundlenat/pretrain.hpp"

namespace bundlenat {

// Registers enc.<block>.<head>.{wq,wk,wv}, enc.<block>.wm, enc.<block>.{w1,w2}.
void init_encoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Preference rows p_i = concat(e_item, e_user); zeros when use_pref is off.
Tensor assemble_preference(const GenerationInstance& inst, const PreferenceEmbeddings& pref,
                           const ModelConfig& cfg);

// X = P + C, row i bound to candidates[i]. `compat_rows` may be null when the
// compatibility signal is disabled (and must be |candidates| x d otherwise).
Var assemble_input(Ctx& ctx, const GenerationInstance& inst, const PreferenceEmbeddings* pref,
                   const Var& compat_rows, const ModelConfig& cfg);

// Multi-head scaled dot-product self-attention with an output mix. Rows are
// processed in canonical (content-lexicographic) order internally, so the op
// is bit-exactly permutation-equivariant.
Var multihead_self_attention(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& x,
                             const std::string& prefix);

// X + relu(X W1) W2; no layer normalization unless cfg.layer_norm.
Var encoder_ffn(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& x,
                const std::string& prefix);

// depth-many (attention -> FFN) units.
Var encode(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& x);

}  // namespace bundlenat
