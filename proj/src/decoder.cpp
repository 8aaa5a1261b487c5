#include "bundlenat/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, double std, Rng& rng) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = std * rng.next_normal();
    return t;
}

std::string block_prefix(int block) { return "dec." + std::to_string(block); }

}  // namespace

void init_decoder_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    const int d = cfg.d();
    if (d % cfg.heads != 0) throw ConfigError("decoder: width " + std::to_string(d) + " not divisible by heads");
    const int dh = cfg.d_head();
    const double w_std = 1.0 / std::sqrt(static_cast<double>(d));
    for (int b = 0; b < cfg.depth; ++b) {
        const std::string bp = block_prefix(b);
        for (const char* kind : {"self", "cross"}) {
            for (int h = 0; h < cfg.heads; ++h) {
                const std::string hp = bp + "." + kind + "." + std::to_string(h);
                ps.add(hp + ".wq", random_matrix(d, dh, w_std, rng));
                ps.add(hp + ".wk", random_matrix(d, dh, w_std, rng));
                ps.add(hp + ".wv", random_matrix(d, dh, w_std, rng));
            }
            ps.add(bp + "." + kind + ".wm", random_matrix(d, d, w_std, rng));
        }
        ps.add(bp + ".w1", random_matrix(d, d, w_std, rng));
        ps.add(bp + ".w2", random_matrix(d, d, w_std, rng));
    }
    ps.add("dec.proj.wo", random_matrix(d, static_cast<std::size_t>(cfg.n_items), w_std, rng));
    ps.add("dec.proj.bo", Tensor(1, static_cast<std::size_t>(cfg.n_items)));
}

Var copy_from_encoder(Ctx& ctx, const Var& xf) { return mean_over_rows(ctx, xf); }

Var one_token_attention(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& h, int block) {
    const int d = static_cast<int>(h->value.cols());
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(d / cfg.heads));
    const std::string bp = block_prefix(block) + ".self";
    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(cfg.heads));
    for (int hd = 0; hd < cfg.heads; ++hd) {
        const std::string hp = bp + "." + std::to_string(hd);
        Var q = matmul(ctx, h, param(ctx, ps, hp + ".wq"));
        Var k = matmul(ctx, h, param(ctx, ps, hp + ".wk"));
        Var v = matmul(ctx, h, param(ctx, ps, hp + ".wv"));
        Var attn = softmax_rows(ctx, scale(ctx, matmul_nt(ctx, q, k), inv_sqrt_dh));
        attn = dropout(ctx, attn, cfg.dropout);
        heads.push_back(matmul(ctx, attn, v));
    }
    return matmul(ctx, concat_cols(ctx, heads), param(ctx, ps, bp + ".wm"));
}

Var cross_attention(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& h, const Var& xf,
                    int block) {
    if (h->value.cols() != xf->value.cols())
        throw DimensionError("cross_attention: query " + h->value.shape_str() + " vs encoder rows " +
                             xf->value.shape_str());
    const int d = static_cast<int>(h->value.cols());
    const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(d / cfg.heads));
    const std::string bp = block_prefix(block) + ".cross";

    // Canonical encoder-row order: the convex combination over rows becomes
    // bit-exactly invariant to the candidate order.
    Var xs = permute_rows(ctx, xf, lex_row_order(xf->value));

    std::vector<Var> heads;
    heads.reserve(static_cast<std::size_t>(cfg.heads));
    for (int hd = 0; hd < cfg.heads; ++hd) {
        const std::string hp = bp + "." + std::to_string(hd);
        Var q = matmul(ctx, h, param(ctx, ps, hp + ".wq"));
        Var k = matmul(ctx, xs, param(ctx, ps, hp + ".wk"));
        Var v = matmul(ctx, xs, param(ctx, ps, hp + ".wv"));
        Var attn = softmax_rows(ctx, scale(ctx, matmul_nt(ctx, q, k), inv_sqrt_dh));
        attn = dropout(ctx, attn, cfg.dropout);
        heads.push_back(matmul(ctx, attn, v));
    }
    return matmul(ctx, concat_cols(ctx, heads), param(ctx, ps, bp + ".wm"));
}

Var decoder_ffn(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& h, int block) {
    const std::string bp = block_prefix(block);
    Var hidden = relu(ctx, matmul(ctx, h, param(ctx, ps, bp + ".w1")));
    Var proj = matmul(ctx, hidden, param(ctx, ps, bp + ".w2"));
    proj = dropout(ctx, proj, cfg.dropout);
    return add(ctx, h, proj);
}

Var decoder_stack(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& xf) {
    Var h = copy_from_encoder(ctx, xf);
    for (int b = 0; b < cfg.depth; ++b) {
        h = one_token_attention(ctx, ps, cfg, h, b);
        h = cross_attention(ctx, ps, cfg, h, xf, b);
        h = decoder_ffn(ctx, ps, cfg, h, b);
    }
    return h;
}

Var project(Ctx& ctx, ParamStore& ps, const Var& h_d) {
    Var logits = add(ctx, matmul(ctx, h_d, param(ctx, ps, "dec.proj.wo")), param(ctx, ps, "dec.proj.bo"));
    return sigmoid(ctx, logits);
}

std::vector<int> infer_bundle(const PredictionDistribution& dist, int k) {
    if (k <= 0) throw ArgumentError("infer_bundle: k must be positive");
    std::vector<int> cands;
    for (std::size_t i = 0; i < dist.candidate_mask.size(); ++i)
        if (dist.candidate_mask[i]) cands.push_back(static_cast<int>(i));
    if (static_cast<std::size_t>(k) > cands.size())
        throw ArgumentError("infer_bundle: k=" + std::to_string(k) + " exceeds " +
                            std::to_string(cands.size()) + " candidates");
    std::sort(cands.begin(), cands.end(), [&](int a, int b) {
        const double sa = dist.h_o.at(0, static_cast<std::size_t>(a));
        const double sb = dist.h_o.at(0, static_cast<std::size_t>(b));
        if (sa != sb) return sa > sb;
        return a < b;  // deterministic tie-break
    });
    cands.resize(static_cast<std::size_t>(k));
    return cands;
}

namespace {

PredictionDistribution make_distribution(const Tensor& h_o, const std::vector<int>& candidate_ids) {
    PredictionDistribution dist;
    dist.h_o = h_o;
    dist.candidate_mask.assign(h_o.cols(), 0);
    std::set<int> seen;
    for (int id : candidate_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= h_o.cols())
            throw RangeError("decode: candidate id " + std::to_string(id) + " out of vocabulary range");
        if (!seen.insert(id).second) throw DataError("decode: duplicate candidate id " + std::to_string(id));
        dist.candidate_mask[static_cast<std::size_t>(id)] = 1;
    }
    return dist;
}

}  // namespace

DecodeResult decode(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& xf,
                    const std::vector<int>& candidate_ids, int k) {
    DecodeResult res;
    Var h_o = project(ctx, ps, decoder_stack(ctx, ps, cfg, xf));
    res.decoder_passes = 1;
    res.dist = make_distribution(h_o->value, candidate_ids);
    res.bundle = infer_bundle(res.dist, k);
    return res;
}

DecodeResult decode_autoregressive_stub(Ctx& ctx, ParamStore& ps, const ModelConfig& cfg, const Var& xf,
                                        const std::vector<int>& candidate_ids, int k) {
    DecodeResult res;
    res.decoder_passes = 0;
    std::set<int> chosen;
    for (int step = 0; step < k; ++step) {
        Var h_o = project(ctx, ps, decoder_stack(ctx, ps, cfg, xf));
        ++res.decoder_passes;
        PredictionDistribution dist = make_distribution(h_o->value, candidate_ids);
        for (int c : chosen) dist.candidate_mask[static_cast<std::size_t>(c)] = 0;
        const std::vector<int> pick = infer_bundle(dist, 1);
        chosen.insert(pick[0]);
        res.bundle.push_back(pick[0]);
        if (step == k - 1) res.dist = std::move(dist);
    }
    return res;
}

}  // namespace bundlenat
