#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bundlenat/interactions.hpp"
#include "bundlenat/rng.hpp"

namespace bundlenat {

// One generation example: pick the K bundle items out of M candidates.
// bundle keeps its sampling order (bundle[0] is the "first-place" item used
// by the strict precision metric); bundle is always a subset of candidates.
struct GenerationInstance {
    int user_id = 0;
    std::vector<int> candidates;  // M distinct item ids
    std::vector<int> bundle;      // K distinct item ids, subset of candidates
};

struct DatasetSplit {
    std::vector<GenerationInstance> train;
    std::vector<GenerationInstance> test;
    int n_users = 0;
    int n_items = 0;
    int n_bundles = 0;
    int k = 0;
    int m = 0;
};

struct BuildStats {
    int skipped_small_bundles = 0;
    int duplicates_removed = 0;
};

// One instance per (user, interacted bundle) pair: K items sampled from the
// bundle, M-K uniform negatives, positives placed at uniform positions.
// Per-user duplicate size-K samples are dropped. `bundle_ids_out`, when
// given, receives the source bundle id of each instance (same order).
std::vector<GenerationInstance> build_instances(const InteractionTables& tables, int k, int m, Rng rng,
                                                BuildStats* stats = nullptr,
                                                std::vector<int>* bundle_ids_out = nullptr);

// Seeded uniform shuffle, first floor(80%) to train.
DatasetSplit split_80_20(std::vector<GenerationInstance> instances, int k, int m,
                         const InteractionTables& tables, Rng rng,
                         const std::vector<int>* bundle_ids = nullptr,
                         std::vector<int>* train_bundle_ids_out = nullptr);

void write_instances(const DatasetSplit& split, const std::string& dir);
DatasetSplit read_instances(const std::string& dir);

void write_instance_file(const std::string& path, const std::vector<GenerationInstance>& instances, int k, int m);
std::vector<GenerationInstance> read_instance_file(const std::string& path, int* k_out, int* m_out);

std::string format_instance_line(const GenerationInstance& inst);
GenerationInstance parse_instance_line(const std::string& line, const std::string& where);

void write_bundle_id_file(const std::string& path, const std::vector<int>& ids);
std::vector<int> read_bundle_id_file(const std::string& path);

}  // namespace bundlenat
