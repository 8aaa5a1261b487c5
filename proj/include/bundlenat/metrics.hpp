#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bundlenat/model.hpp"

namespace bundlenat {

enum class PrecisionMode {
    FirstMatch,  // strict: predicted first item equals the stored first truth item
    Member       // order-free: predicted first item appears anywhere in the truth bundle
};

double precision_at_k(const std::vector<std::vector<int>>& predicted,
                      const std::vector<std::vector<int>>& truth, PrecisionMode mode);
double precision_plus_at_k(const std::vector<std::vector<int>>& predicted,
                           const std::vector<std::vector<int>>& truth);
double recall_at_k(const std::vector<std::vector<int>>& predicted,
                   const std::vector<std::vector<int>>& truth, int k);

// Batched inference with the GNN propagation shared across instances.
std::vector<std::vector<int>> predict_bundles(Model& model, const PreferenceEmbeddings* pref,
                                              const CooccurrenceGraph* graph,
                                              const std::vector<GenerationInstance>& instances, int k);

struct RankingBaseline {
    std::string name;
    std::function<std::vector<int>(const GenerationInstance&, int)> predict;
};

// Popularity by train bundle-membership counts; ties broken by ascending id.
RankingBaseline pop_baseline(const std::vector<GenerationInstance>& train_instances);
// Top-k candidates by pretrained dot-product score e_u . e_v.
RankingBaseline bpr_baseline(const PreferenceEmbeddings& emb);

struct LatencyRow {
    int k = 0;
    std::int64_t nat_passes = 0;
    std::int64_t ar_passes = 0;
    std::size_t n_instances = 0;
};

// Deterministic decoder-pass counts per generated bundle: one-shot decode vs
// the item-at-a-time autoregressive stub.
std::vector<LatencyRow> latency_account(Model& model, const PreferenceEmbeddings* pref,
                                        const CooccurrenceGraph* graph,
                                        const std::vector<GenerationInstance>& instances,
                                        const std::vector<int>& k_values);

struct MethodResult {
    std::string method;
    double precision = 0.0;
    double precision_plus = 0.0;
    double recall = 0.0;
    int k = 0;
    int m = 0;
    std::size_t n_instances = 0;
    double passes_per_bundle = 0.0;
};

MethodResult score_method(const std::string& name, const std::vector<std::vector<int>>& predicted,
                          const std::vector<GenerationInstance>& instances, int k, int m,
                          double passes_per_bundle, PrecisionMode mode);

// FNV-1a over the canonical serialization of both splits.
std::string dataset_fingerprint(const DatasetSplit& split);

struct EvalReport {
    nlohmann::ordered_json dataset = nlohmann::ordered_json::object();
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    std::vector<MethodResult> methods;
    std::vector<LatencyRow> latency;
    nlohmann::ordered_json instances = nlohmann::ordered_json::array();  // optional records

    nlohmann::ordered_json to_json() const;
};

void emit_report(const EvalReport& report, const std::string& path);
EvalReport parse_report(const std::string& path);

}  // namespace bundlenat
