#include "bundlenat/compat_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "bundlenat/checkpoint.hpp"
#include "bundlenat/errors.hpp"

namespace bundlenat {

CooccurrenceGraph::CooccurrenceGraph(Tensor g) : g_(std::move(g)) {
    if (g_.rows() != g_.cols())
        throw DimensionError("co-occurrence matrix must be square, got " + g_.shape_str());
    auto adj = std::make_shared<GraphAdjacency>();
    adj->n = static_cast<int>(g_.rows());
    adj->rows.resize(g_.rows());
    for (std::size_t i = 0; i < g_.rows(); ++i) {
        for (std::size_t j = 0; j < g_.cols(); ++j) {
            if (i == j) continue;
            const double w = g_.at(i, j);
            if (w != 0.0) adj->rows[i].emplace_back(static_cast<int>(j), w);
        }
    }
    adj_ = std::move(adj);
}

Tensor build_frequency_matrix(const std::vector<std::pair<int, int>>& bundle_item, int n_items,
                              int n_bundles, const std::vector<int>* bundle_filter) {
    if (n_items <= 0 || n_bundles <= 0)
        throw ConfigError("build_frequency_matrix: vocabulary sizes must be positive");
    std::set<int> keep;
    if (bundle_filter) keep.insert(bundle_filter->begin(), bundle_filter->end());
    Tensor f(static_cast<std::size_t>(n_items), static_cast<std::size_t>(n_bundles));
    for (const auto& [b, v] : bundle_item) {
        if (b < 0 || b >= n_bundles || v < 0 || v >= n_items)
            throw RangeError("build_frequency_matrix: pair (" + std::to_string(b) + "," + std::to_string(v) +
                             ") out of range");
        if (bundle_filter && !keep.count(b)) continue;
        f.at(static_cast<std::size_t>(v), static_cast<std::size_t>(b)) = 1.0;
    }
    return f;
}

CooccurrenceGraph normalize_cooccurrence(const Tensor& f) {
    Tensor a = matmul_nt(f, f);
    const std::size_t n = a.rows();
    std::vector<double> inv_sqrt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < n; ++j) deg += a.at(i, j);
        inv_sqrt[i] = (deg > 0.0) ? 1.0 / std::sqrt(deg) : 0.0;  // isolated items stay zero
    }
    Tensor g(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        g.at(i, i) = a.at(i, i) * inv_sqrt[i] * inv_sqrt[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = a.at(i, j) * inv_sqrt[i] * inv_sqrt[j];
            g.at(i, j) = v;
            g.at(j, i) = v;  // exact symmetry by construction
        }
    }
    return CooccurrenceGraph(std::move(g));
}

void init_gnn_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    const int d = cfg.d();
    // Node features start wide enough that the compatibility signal enters
    // X = P + C at a magnitude comparable to the pretrained preference rows.
    const double z_std = 0.3;
    const double w_std = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor z(static_cast<std::size_t>(cfg.n_items), static_cast<std::size_t>(d));
    for (double& v : z.data()) v = z_std * rng.next_normal();
    ps.add("gnn.z", std::move(z));
    for (int layer = 0; layer < cfg.gnn_layers; ++layer) {
        Tensor w(static_cast<std::size_t>(d), static_cast<std::size_t>(d));
        for (double& v : w.data()) v = w_std * rng.next_normal();
        ps.add("gnn." + std::to_string(layer) + ".w", std::move(w));
        ps.add("gnn." + std::to_string(layer) + ".b", Tensor(1, static_cast<std::size_t>(d)));
    }
}

Var gnn_propagate(Ctx& ctx, ParamStore& ps, const std::shared_ptr<const GraphAdjacency>& adj,
                  int n_layers) {
    if (n_layers < 1) throw ConfigError("gnn_propagate: need at least one layer");
    Var c = param(ctx, ps, "gnn.z");
    for (int layer = 0; layer < n_layers; ++layer) {
        const std::string prefix = "gnn." + std::to_string(layer);
        Var agg = graph_aggregate(ctx, adj, c);
        Var mixed = add(ctx, c, agg);
        Var lin = matmul(ctx, mixed, param(ctx, ps, prefix + ".w"));
        Var biased = add_row_broadcast(ctx, lin, param(ctx, ps, prefix + ".b"));
        c = relu(ctx, biased);
    }
    return c;
}

Var gnn_forward(Ctx& ctx, ParamStore& ps, const CooccurrenceGraph& graph, int n_layers,
                const std::vector<int>& item_ids) {
    for (int id : item_ids)
        if (id < 0 || id >= graph.n_items())
            throw RangeError("gnn_forward: item id " + std::to_string(id) + " out of range");
    Var full = gnn_propagate(ctx, ps, graph.adjacency(), n_layers);
    return gather_rows(ctx, full, item_ids);
}

void save_graph(const std::string& path, const CooccurrenceGraph& graph, std::uint64_t seed) {
    CheckpointMeta meta;
    meta.stage = "build-graph";
    meta.seed = seed;
    meta.config["n_items"] = graph.n_items();
    const Tensor& g = graph.g();
    save_checkpoint(path, {{"g", &g}}, meta);
}

CooccurrenceGraph load_graph(const std::string& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (!ck.tensors.count("g")) throw FormatError(path + ": missing co-occurrence tensor \"g\"");
    return CooccurrenceGraph(std::move(ck.tensors.at("g")));
}

}  // namespace bundlenat
