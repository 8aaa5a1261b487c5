#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <unistd.h>

#include "bundlenat/errors.hpp"
#include "bundlenat/instances.hpp"
#include "bundlenat/interactions.hpp"
#include "bundlenat/synth.hpp"

using namespace bundlenat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("bundlenat-data-" + std::to_string(::getpid()) + "-" +
                                            std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

InteractionTables tiny_tables() {
    InteractionTables t;
    t.user_bundle = {{0, 0}, {1, 0}, {1, 1}};
    t.bundle_item = {{0, 1}, {0, 2}, {0, 3}, {1, 4}, {1, 5}, {1, 6}};
    t.user_item = {{0, 1}, {0, 2}, {1, 4}};
    t.n_users = 2;
    t.n_items = 8;
    t.n_bundles = 2;
    return t;
}

}  // namespace

TEST_CASE("load_pair_file parses, deduplicates and reports malformed lines") {
    TempDir dir;
    const std::string path = dir.str() + "/pairs.tsv";
    {
        std::ofstream out(path);
        out << "# comment\n0\t3\n1\t3\n1\t3\n";
    }
    auto pairs = load_pair_file(path);
    CHECK(pairs.size() == 2);
    CHECK(pairs[0] == std::pair<int, int>{0, 3});

    {
        std::ofstream out(path);
        out << "0\t1\nbogus line\n";
    }
    try {
        load_pair_file(path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    {
        std::ofstream out(path);
        out << "0\t9\n";
    }
    CHECK_THROWS_AS(load_pair_file(path, 10, 5), RangeError);
}

TEST_CASE("build_instances covers the forced k equals bundle size case") {
    InteractionTables t = tiny_tables();
    std::vector<GenerationInstance> instances = build_instances(t, 3, 5, Rng(7));
    REQUIRE(instances.size() == 3);
    for (const auto& inst : instances) {
        CHECK(inst.candidates.size() == 5);
        CHECK(inst.bundle.size() == 3);
        std::set<int> cand(inst.candidates.begin(), inst.candidates.end());
        CHECK(cand.size() == 5);
        for (int b : inst.bundle) CHECK(cand.count(b) == 1);
    }
    // bundle {1,2,3} with k=3 forces exactly those positives
    std::set<int> first(instances[0].bundle.begin(), instances[0].bundle.end());
    CHECK(first == std::set<int>{1, 2, 3});
}

TEST_CASE("build_instances skips undersized bundles and drops per-user duplicate samples") {
    InteractionTables t = tiny_tables();
    t.bundle_item = {{0, 1}, {0, 2}, {0, 3}, {1, 4}};  // bundle 1 now too small for k=3
    BuildStats stats;
    std::vector<GenerationInstance> instances = build_instances(t, 3, 5, Rng(7), &stats);
    CHECK(instances.size() == 2);
    CHECK(stats.skipped_small_bundles == 1);

    // same user interacting with two identical-content bundles -> one instance kept
    InteractionTables dup = tiny_tables();
    dup.user_bundle = {{0, 0}, {0, 1}};
    dup.bundle_item = {{0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}};
    BuildStats dstats;
    std::vector<GenerationInstance> dinst = build_instances(dup, 3, 5, Rng(7), &dstats);
    CHECK(dinst.size() == 1);
    CHECK(dstats.duplicates_removed == 1);
}

TEST_CASE("build_instances validates configuration") {
    InteractionTables t = tiny_tables();
    CHECK_THROWS_AS(build_instances(t, 3, 9, Rng(1)), ConfigError);  // m > n_items
    CHECK_THROWS_AS(build_instances(t, 0, 5, Rng(1)), ConfigError);
}

TEST_CASE("build_instances is deterministic per seed") {
    SynthConfig sc;
    sc.n_users = 30;
    sc.n_items = 60;
    sc.n_clusters = 6;
    sc.k = 3;
    sc.m = 12;
    sc.catalog_per_cluster = 4;
    sc.bundles_per_user = 2;
    SynthResult sr = synth_planted(sc);
    auto a = build_instances(sr.tables, 3, 12, Rng(99));
    auto b = build_instances(sr.tables, 3, 12, Rng(99));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(format_instance_line(a[i]) == format_instance_line(b[i]));
    }
    auto c = build_instances(sr.tables, 3, 12, Rng(100));
    bool any_diff = false;
    for (std::size_t i = 0; i < std::min(a.size(), c.size()); ++i)
        if (format_instance_line(a[i]) != format_instance_line(c[i])) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("positive positions are uniform across candidate slots") {
    // 10,000 instances with m=10, k=1: each slot should hold the positive
    // about 1,000 times, within 5% relative deviation.
    InteractionTables t;
    t.n_users = 10000;
    t.n_items = 40;
    t.n_bundles = 1;
    t.bundle_item = {{0, 0}, {0, 1}, {0, 2}};
    for (int u = 0; u < 10000; ++u) t.user_bundle.emplace_back(u, 0);
    t.user_item = {{0, 0}};
    std::vector<GenerationInstance> instances = build_instances(t, 1, 10, Rng(123));
    REQUIRE(instances.size() == 10000);
    std::vector<int> histogram(10, 0);
    for (const auto& inst : instances) {
        for (std::size_t slot = 0; slot < inst.candidates.size(); ++slot)
            if (inst.candidates[slot] == inst.bundle[0]) ++histogram[slot];
    }
    for (int count : histogram) {
        CHECK(count > 950);
        CHECK(count < 1050);
    }
}

TEST_CASE("split_80_20 floor rule and partition") {
    InteractionTables t = tiny_tables();
    std::vector<GenerationInstance> ten(10);
    for (int i = 0; i < 10; ++i) ten[static_cast<std::size_t>(i)].user_id = i;
    DatasetSplit s10 = split_80_20(ten, 3, 5, t, Rng(1));
    CHECK(s10.train.size() == 8);
    CHECK(s10.test.size() == 2);

    std::vector<GenerationInstance> nine(9);
    for (int i = 0; i < 9; ++i) nine[static_cast<std::size_t>(i)].user_id = i;
    DatasetSplit s9 = split_80_20(nine, 3, 5, t, Rng(1));
    CHECK(s9.train.size() == 7);
    CHECK(s9.test.size() == 2);

    std::set<int> seen;
    for (const auto& inst : s9.train) seen.insert(inst.user_id);
    for (const auto& inst : s9.test) CHECK(seen.count(inst.user_id) == 0);  // disjoint partition

    std::vector<GenerationInstance> four(4);
    CHECK_THROWS_AS(split_80_20(four, 3, 5, t, Rng(1)), ArgumentError);
}

TEST_CASE("synth_planted with zero noise yields cluster-pure bundles") {
    SynthConfig sc;
    sc.n_users = 20;
    sc.n_items = 40;
    sc.n_clusters = 4;
    sc.noise_rate = 0.0;
    sc.k = 4;
    sc.m = 20;
    sc.catalog_per_cluster = 5;
    sc.bundles_per_user = 2;
    SynthResult sr = synth_planted(sc);
    std::map<int, std::vector<int>> items_of_bundle;
    for (const auto& [b, v] : sr.tables.bundle_item) items_of_bundle[b].push_back(v);
    for (const auto& [b, items] : items_of_bundle) {
        std::set<int> clusters;
        for (int v : items) clusters.insert(sr.item_cluster[static_cast<std::size_t>(v)]);
        CHECK(clusters.size() == 1);
    }
}

TEST_CASE("synth_planted single cluster covers every item pair") {
    SynthConfig sc;
    sc.n_users = 40;
    sc.n_items = 6;
    sc.n_clusters = 1;
    sc.k = 3;
    sc.m = 5;
    sc.noise_rate = 0.0;
    sc.catalog_per_cluster = 30;
    sc.bundles_per_user = 3;
    sc.extra_per_cluster = 2;
    sc.seed = 7;
    SynthResult sr = synth_planted(sc);
    // co-occurrence support: every off-diagonal pair shares a bundle
    std::map<int, std::set<int>> items_of_bundle;
    for (const auto& [b, v] : sr.tables.bundle_item) items_of_bundle[b].insert(v);
    std::set<std::pair<int, int>> covered;
    for (const auto& [b, items] : items_of_bundle)
        for (int a : items)
            for (int c : items)
                if (a != c) covered.emplace(a, c);
    CHECK(covered.size() == 6u * 5u);
}

TEST_CASE("synth_planted validates sizes") {
    SynthConfig sc;
    sc.n_items = 10;
    sc.n_clusters = 3;  // not divisible
    CHECK_THROWS_AS(synth_planted(sc), ConfigError);
    SynthConfig sc2;
    sc2.noise_rate = 1.0;
    CHECK_THROWS_AS(synth_planted(sc2), ConfigError);
}

TEST_CASE("default planted config passes the table invariants") {
    SynthConfig sc;  // 500 items, 10 clusters, 200 users, k=5, m=100
    SynthResult sr = synth_planted(sc);
    const InteractionTables& t = sr.tables;
    std::set<std::pair<int, int>> ui(t.user_item.begin(), t.user_item.end());
    CHECK(ui.size() == t.user_item.size());
    for (const auto& [u, v] : t.user_item) {
        CHECK(u >= 0);
        CHECK(u < t.n_users);
        CHECK(v >= 0);
        CHECK(v < t.n_items);
    }
    for (const auto& [u, b] : t.user_bundle) {
        CHECK(u < t.n_users);
        CHECK(b < t.n_bundles);
    }
    for (const auto& [b, v] : t.bundle_item) {
        CHECK(b < t.n_bundles);
        CHECK(v < t.n_items);
    }
    CHECK(sr.item_cluster.size() == 500);
}

TEST_CASE("instance files round-trip exactly") {
    TempDir dir;
    Rng rng(5);
    DatasetSplit split;
    split.k = 3;
    split.m = 8;
    for (int i = 0; i < 1000; ++i) {
        GenerationInstance inst;
        inst.user_id = static_cast<int>(rng.next_below(50));
        std::set<int> cand;
        while (cand.size() < 8) cand.insert(static_cast<int>(rng.next_below(100)));
        inst.candidates.assign(cand.begin(), cand.end());
        rng.shuffle(inst.candidates);
        inst.bundle.assign(inst.candidates.begin(), inst.candidates.begin() + 3);
        if (i % 5 == 0)
            split.test.push_back(inst);
        else
            split.train.push_back(inst);
    }
    write_instances(split, dir.str());
    DatasetSplit back = read_instances(dir.str());
    CHECK(back.k == 3);
    CHECK(back.m == 8);
    REQUIRE(back.train.size() == split.train.size());
    REQUIRE(back.test.size() == split.test.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        CHECK(back.train[i].user_id == split.train[i].user_id);
        CHECK(back.train[i].candidates == split.train[i].candidates);
        CHECK(back.train[i].bundle == split.train[i].bundle);
    }
    // a second write is byte-identical
    TempDir dir2;
    write_instances(back, dir2.str());
    CHECK(slurp(dir.str() + "/train.inst") == slurp(dir2.str() + "/train.inst"));
    CHECK(slurp(dir.str() + "/test.inst") == slurp(dir2.str() + "/test.inst"));
}

TEST_CASE("empty test split round-trips") {
    TempDir dir;
    DatasetSplit split;
    split.k = 2;
    split.m = 4;
    GenerationInstance inst;
    inst.user_id = 0;
    inst.candidates = {3, 1, 4, 2};
    inst.bundle = {4, 1};
    split.train.push_back(inst);
    write_instances(split, dir.str());
    DatasetSplit back = read_instances(dir.str());
    CHECK(back.train.size() == 1);
    CHECK(back.test.empty());
}

TEST_CASE("corrupted instance line reports file and line") {
    TempDir dir;
    {
        std::ofstream out(dir.str() + "/train.inst");
        out << "#bundlenat-inst v1 k=2 m=4\n";
        out << "u=0|c=1,2,3,4|b=1,2\n";
        out << "u=0|c=oops|b=1\n";
    }
    {
        std::ofstream out(dir.str() + "/test.inst");
        out << "#bundlenat-inst v1 k=2 m=4\n";
    }
    try {
        read_instances(dir.str());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("train.inst:3") != std::string::npos);
    }
}

TEST_CASE("version tag mismatch is a format error") {
    TempDir dir;
    {
        std::ofstream out(dir.str() + "/train.inst");
        out << "#bundlenat-inst v9 k=2 m=4\n";
    }
    {
        std::ofstream out(dir.str() + "/test.inst");
        out << "#bundlenat-inst v1 k=2 m=4\n";
    }
    CHECK_THROWS_AS(read_instances(dir.str()), FormatError);
}

TEST_CASE("bundle id files round-trip and validate their tag") {
    TempDir dir;
    const std::string path = dir.str() + "/train_bundles.ids";
    write_bundle_id_file(path, {0, 4, 9});
    CHECK(read_bundle_id_file(path) == std::vector<int>{0, 4, 9});
    {
        std::ofstream out(path);
        out << "#wrong\n1\n";
    }
    CHECK_THROWS_AS(read_bundle_id_file(path), FormatError);
}
