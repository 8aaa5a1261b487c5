#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "bundlenat/errors.hpp"
#include "bundlenat/pretrain.hpp"
#include "bundlenat/synth.hpp"

using namespace bundlenat;

namespace {

SynthResult small_planted() {
    SynthConfig sc;
    sc.n_users = 60;
    sc.n_items = 120;
    sc.n_clusters = 6;
    sc.k = 4;
    sc.m = 30;
    sc.catalog_per_cluster = 5;
    sc.bundles_per_user = 2;
    sc.extra_per_cluster = 6;
    sc.seed = 31;
    return synth_planted(sc);
}

std::string temp_file(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("leave_one_out_split holds out exactly one pair per eligible user") {
    std::vector<std::pair<int, int>> pairs = {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}, {1, 9}};
    LeaveOneOut loo = leave_one_out_split(pairs, Rng(4));
    CHECK(loo.held_out.size() == 1);        // user 1 has a single interaction
    CHECK(loo.held_out[0].first == 0);
    CHECK(loo.train.size() == 5);

    std::set<std::pair<int, int>> all(pairs.begin(), pairs.end());
    std::set<std::pair<int, int>> merged(loo.train.begin(), loo.train.end());
    for (const auto& p : loo.held_out) CHECK(merged.insert(p).second);  // disjoint
    CHECK(merged == all);                                               // union restores the input
}

TEST_CASE("bpr_loss closed forms") {
    CHECK(bpr_loss(1.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(bpr_loss(25.0, 5.0) < 1e-8);
    CHECK(bpr_loss(1.0, 4.0) == doctest::Approx(std::log(1.0 + std::exp(3.0))).epsilon(1e-12));
    CHECK(bpr_loss(1.0, 4.0) == doctest::Approx(3.048587).epsilon(1e-6));
}

TEST_CASE("bpr_loss symmetric sum is at least 2 ln 2") {
    Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = 4.0 * rng.next_normal();
        const double b = 4.0 * rng.next_normal();
        const double sum = bpr_loss(a, b) + bpr_loss(b, a);
        CHECK(sum >= 2.0 * std::log(2.0) - 1e-12);
    }
    CHECK(bpr_loss(0.7, 0.7) + bpr_loss(0.7, 0.7) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("zero epochs returns the initialization unchanged") {
    SynthResult sr = small_planted();
    PretrainConfig cfg;
    cfg.d_e = 8;
    cfg.epochs = 0;
    cfg.seed = 5;
    PretrainResult a = train_mf_bpr(sr.tables, cfg);
    PretrainResult b = train_mf_bpr(sr.tables, cfg);
    CHECK(a.epoch_losses.empty());
    for (std::size_t i = 0; i < a.emb.user_table.size(); ++i)
        CHECK(a.emb.user_table.data()[i] == b.emb.user_table.data()[i]);
}

TEST_CASE("training is deterministic and decreases the smoothed loss") {
    SynthResult sr = small_planted();
    PretrainConfig cfg;
    cfg.d_e = 16;
    cfg.epochs = 20;
    cfg.seed = 5;
    PretrainResult a = train_mf_bpr(sr.tables, cfg);
    PretrainResult b = train_mf_bpr(sr.tables, cfg);
    for (std::size_t i = 0; i < a.emb.item_table.size(); ++i)
        CHECK(a.emb.item_table.data()[i] == b.emb.item_table.data()[i]);

    // window-10 smoothed loss decreases front to back
    REQUIRE(a.epoch_losses.size() == 20);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 10; ++i) {
        head += a.epoch_losses[static_cast<std::size_t>(i)];
        tail += a.epoch_losses[static_cast<std::size_t>(10 + i)];
    }
    CHECK(tail < head);
}

TEST_CASE("auc_eval sanity: random is chance level, oracle is perfect") {
    // 1000 users x 3 interactions; held-out AUC averages 1000 independent
    // users x 10 negatives = 10,000 comparisons.
    const int n_users = 1000, n_items = 300;
    std::vector<std::pair<int, int>> pairs;
    for (int u = 0; u < n_users; ++u)
        for (int t = 0; t < 3; ++t) pairs.emplace_back(u, (u * 7 + t * 41) % n_items);
    LeaveOneOut loo = leave_one_out_split(pairs, Rng(8));
    REQUIRE(loo.held_out.size() == static_cast<std::size_t>(n_users));

    PreferenceEmbeddings random_emb;
    random_emb.user_table = Tensor(n_users, 8);
    random_emb.item_table = Tensor(n_items, 8);
    Rng rng(55);
    for (double& v : random_emb.user_table.data()) v = 0.01 * rng.next_normal();
    for (double& v : random_emb.item_table.data()) v = 0.01 * rng.next_normal();
    const double auc_random = auc_eval(random_emb, loo.held_out, pairs, 10, Rng(3));
    CHECK(auc_random > 0.45);
    CHECK(auc_random < 0.55);

    // oracle: one indicator dimension per user lights up exactly the user's
    // held-out item, so the positive always scores strictly highest
    const int small_users = 40, small_items = 60;
    std::vector<std::pair<int, int>> small_pairs;
    for (int u = 0; u < small_users; ++u)
        for (int t = 0; t < 3; ++t) small_pairs.emplace_back(u, (u * 5 + t * 13) % small_items);
    LeaveOneOut small_loo = leave_one_out_split(small_pairs, Rng(8));
    PreferenceEmbeddings oracle;
    oracle.user_table = Tensor(small_users, static_cast<std::size_t>(small_users));
    oracle.item_table = Tensor(small_items, static_cast<std::size_t>(small_users));
    for (int u = 0; u < small_users; ++u) oracle.user_table.at(static_cast<std::size_t>(u), static_cast<std::size_t>(u)) = 1.0;
    for (const auto& [u, v] : small_loo.held_out)
        oracle.item_table.at(static_cast<std::size_t>(v), static_cast<std::size_t>(u)) = 10.0;
    const double auc_oracle = auc_eval(oracle, small_loo.held_out, small_pairs, 100, Rng(3));
    CHECK(auc_oracle == 1.0);
}

TEST_CASE("trained embeddings reach high held-out AUC on planted data") {
    SynthResult sr = small_planted();
    LeaveOneOut loo = leave_one_out_split(sr.tables.user_item, Rng(8));
    InteractionTables train_tables = sr.tables;
    train_tables.user_item = loo.train;
    PretrainConfig cfg;
    cfg.d_e = 16;
    cfg.epochs = 30;
    cfg.seed = 5;
    PretrainResult res = train_mf_bpr(train_tables, cfg);
    const double auc = auc_eval(res.emb, loo.held_out, sr.tables.user_item, 100, Rng(3));
    CHECK(auc >= 0.9);
}

TEST_CASE("adding a shift orthogonal to a user's vector never changes that user's ranking") {
    SynthResult sr = small_planted();
    PretrainConfig cfg;
    cfg.d_e = 8;
    cfg.epochs = 10;
    cfg.seed = 5;
    PretrainResult res = train_mf_bpr(sr.tables, cfg);
    const int user = 3;
    const double* eu = res.emb.user_table.row(user);

    // construct a shift orthogonal to e_u by Gram-Schmidt on a random vector
    Rng rng(17);
    std::vector<double> shift(8);
    for (double& v : shift) v = rng.next_normal();
    double dot_eu = 0.0, norm_eu = 0.0;
    for (int f = 0; f < 8; ++f) {
        dot_eu += shift[static_cast<std::size_t>(f)] * eu[f];
        norm_eu += eu[f] * eu[f];
    }
    for (int f = 0; f < 8; ++f) shift[static_cast<std::size_t>(f)] -= dot_eu / norm_eu * eu[f];

    auto rank_items = [&](const Tensor& items) {
        std::vector<std::pair<double, int>> scored;
        for (std::size_t v = 0; v < items.rows(); ++v) {
            double s = 0.0;
            for (int f = 0; f < 8; ++f) s += eu[f] * items.at(v, static_cast<std::size_t>(f));
            scored.emplace_back(-s, static_cast<int>(v));
        }
        std::sort(scored.begin(), scored.end());
        std::vector<int> ids;
        for (const auto& [s, v] : scored) ids.push_back(v);
        return ids;
    };

    Tensor shifted = res.emb.item_table;
    for (std::size_t v = 0; v < shifted.rows(); ++v)
        for (int f = 0; f < 8; ++f) shifted.at(v, static_cast<std::size_t>(f)) += shift[static_cast<std::size_t>(f)];

    CHECK(rank_items(res.emb.item_table) == rank_items(shifted));
}

TEST_CASE("embedding export/import round-trips to the last bit") {
    SynthResult sr = small_planted();
    PretrainConfig cfg;
    cfg.d_e = 12;
    cfg.epochs = 3;
    PretrainResult res = train_mf_bpr(sr.tables, cfg);
    const std::string path = temp_file("bundlenat-pref-roundtrip.ckpt");
    export_embeddings(res.emb, path, cfg.seed, cfg);
    PreferenceEmbeddings back = import_embeddings(path);
    REQUIRE(back.user_table.size() == res.emb.user_table.size());
    for (std::size_t i = 0; i < back.user_table.size(); ++i)
        CHECK(back.user_table.data()[i] == res.emb.user_table.data()[i]);
    for (std::size_t i = 0; i < back.item_table.size(); ++i)
        CHECK(back.item_table.data()[i] == res.emb.item_table.data()[i]);
    CHECK(back.d_e() == 12);
    std::filesystem::remove(path);
}

TEST_CASE("divergent learning rate raises a numeric error") {
    SynthResult sr = small_planted();
    PretrainConfig cfg;
    cfg.d_e = 8;
    cfg.epochs = 40;
    cfg.lr = 1e6;
    CHECK_THROWS_AS(train_mf_bpr(sr.tables, cfg), NumericError);
}
