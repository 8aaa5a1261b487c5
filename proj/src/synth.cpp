#include "bundlenat/synth.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "bundlenat/errors.hpp"
#include "bundlenat/rng.hpp"

namespace bundlenat {

SynthResult synth_planted(const SynthConfig& cfg) {
    if (cfg.n_users <= 0 || cfg.n_items <= 0 || cfg.n_clusters <= 0)
        throw ConfigError("synth_planted: sizes must be positive");
    if (cfg.n_items % cfg.n_clusters != 0)
        throw ConfigError("synth_planted: n_items must be divisible by n_clusters");
    if (cfg.noise_rate < 0.0 || cfg.noise_rate >= 1.0)
        throw ConfigError("synth_planted: noise_rate must be in [0,1)");
    const int cluster_size = cfg.n_items / cfg.n_clusters;
    if (cfg.k <= 0 || cfg.k > cluster_size)
        throw ConfigError("synth_planted: k must be in (0, items per cluster]");
    if (cfg.m > cfg.n_items) throw ConfigError("synth_planted: m exceeds item vocabulary");
    if (cfg.bundles_per_user > cfg.catalog_per_cluster)
        throw ConfigError("synth_planted: bundles_per_user exceeds the per-cluster catalog");
    if (cfg.extra_per_cluster > cluster_size)
        throw ConfigError("synth_planted: extra_per_cluster exceeds the cluster size");

    Rng rng(cfg.seed);
    SynthResult out;
    out.item_cluster.resize(static_cast<std::size_t>(cfg.n_items));
    for (int i = 0; i < cfg.n_items; ++i) out.item_cluster[static_cast<std::size_t>(i)] = i / cluster_size;

    // Shared bundle catalog: catalog_per_cluster size-k bundles per cluster.
    Rng cat_rng = rng.split("catalog");
    std::vector<std::vector<int>> bundle_items;  // by bundle id
    std::vector<int> bundle_cluster;
    for (int c = 0; c < cfg.n_clusters; ++c) {
        for (int t = 0; t < cfg.catalog_per_cluster; ++t) {
            std::vector<int> pool(static_cast<std::size_t>(cluster_size));
            for (int i = 0; i < cluster_size; ++i) pool[static_cast<std::size_t>(i)] = c * cluster_size + i;
            std::vector<int> items;
            std::set<int> used;
            for (int s = 0; s < cfg.k; ++s) {
                const std::size_t j = static_cast<std::size_t>(s) +
                                      cat_rng.next_below(pool.size() - static_cast<std::size_t>(s));
                std::swap(pool[static_cast<std::size_t>(s)], pool[j]);
                int item = pool[static_cast<std::size_t>(s)];
                if (cat_rng.next_double() < cfg.noise_rate) {
                    int swap_to = cat_rng.next_int(cfg.n_items);
                    while (used.count(swap_to)) swap_to = cat_rng.next_int(cfg.n_items);
                    item = swap_to;
                }
                while (used.count(item)) item = cat_rng.next_int(cfg.n_items);
                used.insert(item);
                items.push_back(item);
            }
            bundle_items.push_back(std::move(items));
            bundle_cluster.push_back(c);
        }
    }
    const int n_bundles = static_cast<int>(bundle_items.size());

    std::set<std::pair<int, int>> user_item, user_bundle, bundle_item;
    for (int b = 0; b < n_bundles; ++b)
        for (int v : bundle_items[static_cast<std::size_t>(b)]) bundle_item.emplace(b, v);

    for (int u = 0; u < cfg.n_users; ++u) {
        Rng u_rng = rng.split("user").split(static_cast<std::uint64_t>(u));
        // 1-2 preferred clusters.
        const int n_pref = (cfg.n_clusters == 1) ? 1 : 1 + u_rng.next_int(2);
        std::vector<int> preferred;
        while (static_cast<int>(preferred.size()) < n_pref) {
            const int c = u_rng.next_int(cfg.n_clusters);
            if (std::find(preferred.begin(), preferred.end(), c) == preferred.end()) preferred.push_back(c);
        }

        std::set<int> my_bundles;
        while (static_cast<int>(my_bundles.size()) < cfg.bundles_per_user) {
            const int c = preferred[static_cast<std::size_t>(u_rng.next_int(n_pref))];
            const int b = c * cfg.catalog_per_cluster + u_rng.next_int(cfg.catalog_per_cluster);
            my_bundles.insert(b);
        }
        for (int b : my_bundles) {
            user_bundle.emplace(u, b);
            for (int v : bundle_items[static_cast<std::size_t>(b)]) user_item.emplace(u, v);
        }
        for (int c : preferred) {
            for (int s = 0; s < cfg.extra_per_cluster; ++s)
                user_item.emplace(u, c * cluster_size + u_rng.next_int(cluster_size));
        }
    }

    out.tables.user_item.assign(user_item.begin(), user_item.end());
    out.tables.user_bundle.assign(user_bundle.begin(), user_bundle.end());
    out.tables.bundle_item.assign(bundle_item.begin(), bundle_item.end());
    out.tables.n_users = cfg.n_users;
    out.tables.n_items = cfg.n_items;
    out.tables.n_bundles = n_bundles;
    return out;
}

void write_cluster_map(const std::string& path, const std::vector<int>& item_cluster) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "#bundlenat-clusters v1\n";
    for (std::size_t i = 0; i < item_cluster.size(); ++i) out << i << '\t' << item_cluster[i] << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::vector<int> read_cluster_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string header;
    if (!std::getline(in, header) || header != "#bundlenat-clusters v1")
        throw FormatError(path + ": version tag mismatch");
    std::vector<int> clusters;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError(path + ": malformed cluster row \"" + line + "\"");
        clusters.push_back(std::stoi(line.substr(tab + 1)));
    }
    return clusters;
}

}  // namespace bundlenat
