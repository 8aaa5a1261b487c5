#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bundlenat/interactions.hpp"

namespace bundlenat {

// Planted-structure generator. Items are partitioned into clusters; a shared
// per-cluster catalog of size-k bundles is drawn (each item swapped for a
// uniform random one with probability noise_rate); users prefer 1-2 clusters
// and interact with bundles from those catalogs, so the same bundle is seen
// by several users. User-item interactions are the union of the user's
// bundle items plus extra uniform samples from each preferred cluster.
struct SynthConfig {
    int n_users = 200;
    int n_items = 500;
    int n_clusters = 10;
    int bundles_per_user = 3;
    int k = 5;
    int m = 100;
    double noise_rate = 0.05;
    int catalog_per_cluster = 8;  // shared bundles available per cluster
    int extra_per_cluster = 5;    // extra user-item samples per preferred cluster
    std::uint64_t seed = 7;
};

struct SynthResult {
    InteractionTables tables;
    std::vector<int> item_cluster;  // ground-truth cluster of each item
};

SynthResult synth_planted(const SynthConfig& cfg);

void write_cluster_map(const std::string& path, const std::vector<int>& item_cluster);
std::vector<int> read_cluster_map(const std::string& path);

}  // namespace bundlenat
