#include "bundlenat/model.hpp"

#include "bundlenat/checkpoint.hpp"
#include "bundlenat/errors.hpp"

namespace bundlenat {

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
    if (cfg.n_items <= 0) throw ConfigError("init_model: n_items must be set");
    if (cfg.d() % cfg.heads != 0)
        throw ConfigError("init_model: width " + std::to_string(cfg.d()) + " not divisible by " +
                          std::to_string(cfg.heads) + " heads");
    Model m;
    m.cfg = cfg;
    Rng rng = Rng(seed).split("model-init");
    if (cfg.use_compat) {
        Rng r = rng.split("gnn");
        init_gnn_params(m.params, cfg, r);
    }
    {
        Rng r = rng.split("enc");
        init_encoder_params(m.params, cfg, r);
    }
    {
        Rng r = rng.split("dec");
        init_decoder_params(m.params, cfg, r);
    }
    return m;
}

Var model_encode(Ctx& ctx, Model& model, const PreferenceEmbeddings* pref,
                 const CooccurrenceGraph* graph, const GenerationInstance& inst, Var* c_full_cache) {
    const ModelConfig& cfg = model.cfg;
    Var compat_rows;
    if (cfg.use_compat) {
        if (!graph) throw ConfigError("model_encode: compatibility enabled but no graph given");
        if (graph->n_items() != cfg.n_items)
            throw ConfigError("model_encode: graph covers " + std::to_string(graph->n_items()) +
                              " items, model expects " + std::to_string(cfg.n_items));
        Var c_full;
        if (c_full_cache && *c_full_cache) {
            c_full = *c_full_cache;
        } else {
            c_full = gnn_propagate(ctx, model.params, graph->adjacency(), cfg.gnn_layers);
            if (c_full_cache) *c_full_cache = c_full;
        }
        compat_rows = gather_rows(ctx, c_full, inst.candidates);
    }
    Var x = assemble_input(ctx, inst, pref, compat_rows, cfg);
    return encode(ctx, model.params, cfg, x);
}

Var model_scores(Ctx& ctx, Model& model, const PreferenceEmbeddings* pref,
                 const CooccurrenceGraph* graph, const GenerationInstance& inst, Var* c_full_cache) {
    Var xf = model_encode(ctx, model, pref, graph, inst, c_full_cache);
    return project(ctx, model.params, decoder_stack(ctx, model.params, model.cfg, xf));
}

DecodeResult model_decode(Ctx& ctx, Model& model, const PreferenceEmbeddings* pref,
                          const CooccurrenceGraph* graph, const GenerationInstance& inst, int k,
                          Var* c_full_cache) {
    Var xf = model_encode(ctx, model, pref, graph, inst, c_full_cache);
    return decode(ctx, model.params, model.cfg, xf, inst.candidates, k);
}

void save_model(const std::string& path, const Model& model, std::uint64_t seed) {
    CheckpointMeta meta;
    meta.stage = "train";
    meta.seed = seed;
    const ModelConfig& c = model.cfg;
    meta.config["d_e"] = c.d_e;
    meta.config["gnn_layers"] = c.gnn_layers;
    meta.config["depth"] = c.depth;
    meta.config["heads"] = c.heads;
    meta.config["ffn_mult"] = c.ffn_mult;
    meta.config["dropout"] = c.dropout;
    meta.config["layer_norm"] = c.layer_norm;
    meta.config["use_pref"] = c.use_pref;
    meta.config["use_compat"] = c.use_compat;
    meta.config["n_items"] = c.n_items;
    meta.config["n_users"] = c.n_users;
    save_checkpoint(path, model.params, meta);
}

Model load_model(const std::string& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    Model m;
    const auto& c = ck.meta.config;
    try {
        m.cfg.d_e = c.at("d_e").get<int>();
        m.cfg.gnn_layers = c.at("gnn_layers").get<int>();
        m.cfg.depth = c.at("depth").get<int>();
        m.cfg.heads = c.at("heads").get<int>();
        m.cfg.ffn_mult = c.at("ffn_mult").get<int>();
        m.cfg.dropout = c.at("dropout").get<double>();
        m.cfg.layer_norm = c.at("layer_norm").get<bool>();
        m.cfg.use_pref = c.at("use_pref").get<bool>();
        m.cfg.use_compat = c.at("use_compat").get<bool>();
        m.cfg.n_items = c.at("n_items").get<int>();
        m.cfg.n_users = c.at("n_users").get<int>();
    } catch (const std::exception& e) {
        throw FormatError(path + ": incomplete model config: " + e.what());
    }
    for (auto& [name, tensor] : ck.tensors) m.params.add(name, std::move(tensor));
    if (!m.params.has("dec.proj.wo")) throw FormatError(path + ": missing decoder projection");
    const Tensor& wo = m.params.value("dec.proj.wo");
    if (wo.rows() != static_cast<std::size_t>(m.cfg.d()) ||
        wo.cols() != static_cast<std::size_t>(m.cfg.n_items))
        throw FormatError(path + ": projection shape " + wo.shape_str() + " conflicts with config");
    return m;
}

}  // namespace bundlenat
