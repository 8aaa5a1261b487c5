#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "bundlenat/autodiff.hpp"
#include "bundlenat/config.hpp"
#include "bundlenat/tensor.hpp"

namespace bundlenat {

// Symmetric nonnegative item-item compatibility matrix over the full item
// vocabulary, plus the cached off-diagonal adjacency the GNN aggregates over.
class CooccurrenceGraph {
public:
    CooccurrenceGraph() = default;
    explicit CooccurrenceGraph(Tensor g);

    const Tensor& g() const { return g_; }
    int n_items() const { return static_cast<int>(g_.rows()); }
    std::shared_ptr<const GraphAdjacency> adjacency() const { return adj_; }

private:
    Tensor g_;
    std::shared_ptr<const GraphAdjacency> adj_;
};

// F[i][b] = 1 iff item i belongs to bundle b. `bundle_filter`, when given,
// restricts membership to the listed bundles (train-only graph support).
Tensor build_frequency_matrix(const std::vector<std::pair<int, int>>& bundle_item, int n_items,
                              int n_bundles, const std::vector<int>* bundle_filter = nullptr);

// G = D^{-1/2} (F F^T) D^{-1/2} with 0^{-1/2} treated as 0 for isolated
// items; result symmetrized exactly.
CooccurrenceGraph normalize_cooccurrence(const Tensor& f);

// Registers gnn.z, gnn.<layer>.w, gnn.<layer>.b.
void init_gnn_params(ParamStore& ps, const ModelConfig& cfg, Rng& rng);

// Full-vocabulary propagation: c^(k) = relu((c^(k-1) + Agg) W_k + b_k).
Var gnn_propagate(Ctx& ctx, ParamStore& ps, const std::shared_ptr<const GraphAdjacency>& adj,
                  int n_layers);

// Propagates over the full vocabulary, then gathers the rows of item_ids.
Var gnn_forward(Ctx& ctx, ParamStore& ps, const CooccurrenceGraph& graph, int n_layers,
                const std::vector<int>& item_ids);

void save_graph(const std::string& path, const CooccurrenceGraph& graph, std::uint64_t seed);
CooccurrenceGraph load_graph(const std::string& path);

}  // namespace bundlenat
