#include "bundlenat/encoder.hpp"

#include <cmath>

#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, double std, Rng& rng) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = std * rng.next_normal();
    return t;
}

}  // namespace

void init_encoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    const int d = cfg.d();
    if (d % cfg.heads != 0) throw ConfigError("encoder: width " + std::to_string(d) + " not divisible by heads");
    const int dh = cfg.d_head();
    const double w_std = 1.0 / std::sqrt(static_cast<double>(d));
    for (int b = 0; b < cfg.depth; ++b) {
        const std::string bp = "enc." + std::to_string(b);
        for (int h = 0; h < cfg.heads; ++h) {
            const std::string hp = bp + "." + std::to_string(h);
            ps.add(hp + ".wq", random_matrix(d, dh, w_std, rng));
            ps.add(hp + ".wk", random_matrix(d, dh, w_std, rng));
            ps.add(hp + ".wv", random_matrix(d, dh, w_std, rng));
        }
        ps.add(bp + ".wm", random_matrix(d, d, w_std, rng));
        ps.add(bp + ".w1", random_matrix(d, cfg.ffn_width(), w_std, rng));
        ps.add(bp + ".w2", random_matrix(cfg.ffn_width(), d, 1.0 / std::sqrt(static_cast<double>(cfg.ffn_width())), rng));
    }
}

Tensor assemble_preference(const GenerationInstance& inst, const PreferenceEmbeddings& pref,
                           const ModelConfig& cfg) {
    const int d_e = cfg.d_e;
    if (pref.d_e() != d_e)
        throw ConfigError("assemble_input: preference width " + std::to_string(pref.d_e()) +
                          " does not match configured d_e " + std::to_string(d_e));
    if (inst.user_id < 0 || static_cast<std::size_t>(inst.user_id) >= pref.user_table.rows())
        throw RangeError("assemble_input: user id " + std::to_string(inst.user_id) + " out of range");
    Tensor p(inst.candidates.size(), static_cast<std::size_t>(cfg.d()));
    const double* eu = pref.user_table.row(static_cast<std::size_t>(inst.user_id));
    for (std::size_t i = 0; i < inst.candidates.size(); ++i) {
        const int v = inst.candidates[i];
        if (v < 0 || static_cast<std::size_t>(v) >= pref.item_table.rows())
            throw RangeError("assemble_input: item id " + std::to_string(v) + " out of range");
        const double* ev = pref.item_table.row(static_cast<std::size_t>(v));
        double* row = p.row(i);
        for (int f = 0; f < d_e; ++f) row[f] = ev[f];
        for (int f = 0; f < d_e; ++f) row[d_e + f] = eu[f];
    }
    return p;
}

Var assemble_input(Ctx& ctx, const GenerationInstance& inst, const PreferenceEmbeddings* pref,
                   const Var& compat_rows, const ModelConfig& cfg) {
    if (!cfg.use_pref && !cfg.use_compat)
        throw ConfigError("assemble_input: both signals disabled");
    if (cfg.use_compat) {
        if (!compat_rows) throw ConfigError("assemble_input: compatibility rows missing");
        if (compat_rows->value.rows() != inst.candidates.size() ||
            compat_rows->value.cols() != static_cast<std::size_t>(cfg.d()))
            throw DimensionError("assemble_input: compatibility rows " + compat_rows->value.shape_str() +
                                 " do not match " + std::to_string(inst.candidates.size()) + "x" +
                                 std::to_string(cfg.d()));
    }
    if (cfg.use_pref && !pref) throw ConfigError("assemble_input: preference embeddings missing");

    if (cfg.use_pref) {
        Var p = constant(assemble_preference(inst, *pref, cfg));
        if (!cfg.use_compat) return p;
        return add(ctx, p, compat_rows);
    }
    return compat_rows;
}

Var multihead_self_attention(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& x,
                             const std::string& prefix) {
    const int d = static_cast<int>(x->value.cols());
    if (d % cfg.heads != 0)
        throw ConfigError("attention: width " + std::to_string(d) + " not divisible by " +
                          std::to_string(cfg.heads) + " heads");
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(d / cfg.heads));

    // Canonical row order makes the op bit-exactly permutation-equivariant.
    const std::vector<int> order = lex_row_order(x->value);
    Var xs = permute_rows(ctx, x, order);

    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(cfg.heads));
    for (int h = 0; h < cfg.heads; ++h) {
        const std::string hp = prefix + "." + std::to_string(h);
        Var q = matmul(ctx, xs, param(ctx, ps, hp + ".wq"));
        Var k = matmul(ctx, xs, param(ctx, ps, hp + ".wk"));
        Var v = matmul(ctx, xs, param(ctx, ps, hp + ".wv"));
        Var logits = scale(ctx, matmul_nt(ctx, q, k), inv_sqrt_dh);
        Var attn = softmax_rows(ctx, logits);
        attn = dropout(ctx, attn, cfg.dropout);
        heads.push_back(matmul(ctx, attn, v));
    }
    Var mixed = matmul(ctx, concat_cols(ctx, heads), param(ctx, ps, prefix + ".wm"));
    Var out = permute_rows(ctx, mixed, invert_permutation(order));
    if (cfg.layer_norm) out = layer_norm_rows(ctx, out);
    return out;
}

Var encoder_ffn(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& x,
                const std::string& prefix) {
    Var hidden = relu(ctx, matmul(ctx, x, param(ctx, ps, prefix + ".w1")));
    Var proj = matmul(ctx, hidden, param(ctx, ps, prefix + ".w2"));
    proj = dropout(ctx, proj, cfg.dropout);
    Var out = add(ctx, x, proj);
    if (cfg.layer_norm) out = layer_norm_rows(ctx, out);
    return out;
}

Var encode(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& x) {
    if (cfg.depth < 1) throw ConfigError("encode: depth must be >= 1");
    Var cur = x;
    for (int b = 0; b < cfg.depth; ++b) {
        const std::string bp = "enc." + std::to_string(b);
        cur = multihead_self_attention(ctx, ps, cfg, cur, bp);
        cur = encoder_ffn(ctx, ps, cfg, cur, bp);
    }
    return cur;
}

}  // namespace bundlenat
