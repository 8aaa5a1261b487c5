#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bundlenat/hungarian.hpp"
#include "bundlenat/model.hpp"

namespace bundlenat {

struct TrainConfig {
    ModelConfig model;
    double lr = 1e-3;
    double weight_decay = 1e-5;
    int epochs = 10;
    int batch = 1;  // > 1 aggregates by loss averaging (shared GNN pass per batch)
    std::uint64_t seed = 42;
};

// Binary cross-entropy over the instance's candidate coordinates, y = 1 on
// bundle items. With a single shared output distribution the min-over-
// orderings objective is order-constant, so this value IS the training loss.
Var bundle_bce_loss(Ctx& ctx, const Var& h_o, const GenerationInstance& inst);

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // L2 term folded into the gradient pre-moments
};

// Standard Adam with bias correction; requires gradients from backward().
void adam_step(ParamStore& params, const AdamOptions& opts);

struct TrainResult {
    Model model;
    std::vector<double> epoch_losses;
};

// Joint training of GNN + encoder + decoder with frozen preference
// embeddings; instances visited in seeded shuffled order.
TrainResult train(const DatasetSplit& split, const PreferenceEmbeddings& pref,
                  const CooccurrenceGraph& graph, const TrainConfig& cfg);

void write_loss_log(const std::string& path, const std::vector<double>& losses);

struct GridSpec {
    std::vector<double> lrs = {1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> dropouts = {0.0, 0.1, 0.2, 0.3, 0.4};
    std::vector<double> weight_decays = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
};

struct GridRow {
    double lr = 0.0;
    double dropout = 0.0;
    double weight_decay = 0.0;
    double recall_at_k = 0.0;
    double final_loss = 0.0;
};

struct GridResult {
    std::vector<GridRow> rows;  // full enumeration order (lr, dropout, wd)
    std::size_t best_index = 0;
};

// Trains each grid point on 90% of train and selects by Recall@K on the held
// 10%; the real test split is never touched. Points may run concurrently.
GridResult grid_search(const DatasetSplit& split, const PreferenceEmbeddings& pref,
                       const CooccurrenceGraph& graph, const TrainConfig& base, const GridSpec& grid,
                       int jobs = 1);

void write_grid_table(const std::string& path, const GridResult& result);

}  // namespace bundlenat
