#pragma once

#include <cstdint>
#include <string>

#include "bundlenat/compat_graph.hpp"
#include "bundlenat/config.hpp"
#include "bundlenat/decoder.hpp"
#include "bundlenat/encoder.hpp"
#include "bundlenat/instances.hpp"
#include "bundlenat/pretrain.hpp"

namespace bundlenat {

// Trainable pipeline state: GNN + encoder + decoder parameters. Preference
// embeddings stay outside (pretrained, frozen during main training).
struct Model {
    ModelConfig cfg;
    ParamStore params;
};

Model init_model(const ModelConfig& cfg, std::uint64_t seed);

// Encoder output X_F for one instance. `c_full_cache` shares the full
// vocabulary GNN propagation across instances on the same tape (or across a
// whole evaluation when parameters are fixed).
Var model_encode(Ctx& ctx, Model& model, const PreferenceEmbeddings* pref,
                 const CooccurrenceGraph* graph, const GenerationInstance& inst, Var* c_full_cache);

// Training head: predicted distribution h_o (1 x N) for one instance.
Var model_scores(Ctx& ctx, Model& model, const PreferenceEmbeddings* pref,
                 const CooccurrenceGraph* graph, const GenerationInstance& inst, Var* c_full_cache);

// Inference: one-shot decode to a size-k bundle.
DecodeResult model_decode(Ctx& ctx, Model& model, const PreferenceEmbeddings* pref,
                          const CooccurrenceGraph* graph, const GenerationInstance& inst, int k,
                          Var* c_full_cache);

void save_model(const std::string& path, const Model& model, std::uint64_t seed);
Model load_model(const std::string& path);

}  // namespace bundlenat
