#include "bundlenat/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "bundlenat/checkpoint.hpp"
#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double dot(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

LeaveOneOut leave_one_out_split(const std::vector<std::pair<int, int>>& user_item, Rng rng) {
    std::map<int, std::vector<int>> by_user;
    for (const auto& [u, v] : user_item) by_user[u].push_back(v);
    LeaveOneOut out;
    for (auto& [u, items] : by_user) {
        std::sort(items.begin(), items.end());
        if (items.size() < 2) {
            for (int v : items) out.train.emplace_back(u, v);
            continue;
        }
        Rng u_rng = rng.split(static_cast<std::uint64_t>(u));
        const std::size_t held = u_rng.next_below(items.size());
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i == held)
                out.held_out.emplace_back(u, items[i]);
            else
                out.train.emplace_back(u, items[i]);
        }
    }
    return out;
}

double bpr_loss(double score_pos, double score_neg) {
    return softplus(score_neg - score_pos);
}

PretrainResult train_mf_bpr(const InteractionTables& tables, const PretrainConfig& cfg) {
    if (tables.user_item.empty()) throw ConfigError("train_mf_bpr: empty user-item relation");
    if (cfg.d_e <= 0) throw ConfigError("train_mf_bpr: d_e must be positive");

    Rng rng(cfg.seed);
    PretrainResult res;
    res.emb.user_table = Tensor(static_cast<std::size_t>(tables.n_users), static_cast<std::size_t>(cfg.d_e));
    res.emb.item_table = Tensor(static_cast<std::size_t>(tables.n_items), static_cast<std::size_t>(cfg.d_e));
    Rng init = rng.split("init");
    for (double& v : res.emb.user_table.data()) v = 0.01 * init.next_normal();
    for (double& v : res.emb.item_table.data()) v = 0.01 * init.next_normal();

    std::map<int, std::set<int>> interacted;
    for (const auto& [u, v] : tables.user_item) interacted[u].insert(v);

    const int d = cfg.d_e;
    std::vector<std::size_t> order(tables.user_item.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng e_rng = rng.split("epoch").split(static_cast<std::uint64_t>(epoch));
        e_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t loss_n = 0;
        for (std::size_t idx : order) {
            const auto [u, pos] = tables.user_item[idx];
            const std::set<int>& mine = interacted[u];
            for (int t = 0; t < cfg.negatives_per_positive; ++t) {
                int neg = e_rng.next_int(tables.n_items);
                while (mine.count(neg)) neg = e_rng.next_int(tables.n_items);

                double* eu = res.emb.user_table.row(static_cast<std::size_t>(u));
                double* ei = res.emb.item_table.row(static_cast<std::size_t>(pos));
                double* ej = res.emb.item_table.row(static_cast<std::size_t>(neg));
                const double margin = dot(eu, ei, d) - dot(eu, ej, d);
                loss_sum += softplus(-margin);
                ++loss_n;
                const double coef = logistic(-margin);
                const double lr = cfg.lr;
                const double wd = cfg.weight_decay;
                for (int f = 0; f < d; ++f) {
                    const double gu = coef * (ei[f] - ej[f]) - wd * eu[f];
                    const double gi = coef * eu[f] - wd * ei[f];
                    const double gj = -coef * eu[f] - wd * ej[f];
                    eu[f] += lr * gu;
                    ei[f] += lr * gi;
                    ej[f] += lr * gj;
                }
            }
        }
        const double epoch_loss = loss_sum / static_cast<double>(std::max<std::size_t>(loss_n, 1));
        if (!std::isfinite(epoch_loss))
            throw NumericError("train_mf_bpr: loss diverged (NaN); try a smaller --lr");
        res.epoch_losses.push_back(epoch_loss);
    }
    return res;
}

double auc_eval(const PreferenceEmbeddings& emb, const std::vector<std::pair<int, int>>& held_out,
                const std::vector<std::pair<int, int>>& all_pairs, int n_neg_samples, Rng rng) {
    if (held_out.empty()) throw ArgumentError("auc_eval: empty held-out set");
    std::map<int, std::set<int>> interacted;
    for (const auto& [u, v] : all_pairs) interacted[u].insert(v);
    const int d = emb.d_e();
    const int n_items = static_cast<int>(emb.item_table.rows());

    double total = 0.0;
    for (const auto& [u, pos] : held_out) {
        Rng u_rng = rng.split(static_cast<std::uint64_t>(u));
        const double s_pos = dot(emb.user_table.row(static_cast<std::size_t>(u)),
                                 emb.item_table.row(static_cast<std::size_t>(pos)), d);
        const std::set<int>& mine = interacted[u];
        double wins = 0.0;
        for (int t = 0; t < n_neg_samples; ++t) {
            int neg = u_rng.next_int(n_items);
            while (mine.count(neg) || neg == pos) neg = u_rng.next_int(n_items);
            const double s_neg = dot(emb.user_table.row(static_cast<std::size_t>(u)),
                                     emb.item_table.row(static_cast<std::size_t>(neg)), d);
            if (s_neg < s_pos)
                wins += 1.0;
            else if (s_neg == s_pos)
                wins += 0.5;
        }
        total += wins / static_cast<double>(n_neg_samples);
    }
    return total / static_cast<double>(held_out.size());
}

void export_embeddings(const PreferenceEmbeddings& emb, const std::string& path, std::uint64_t seed,
                       const PretrainConfig& cfg) {
    CheckpointMeta meta;
    meta.stage = "pretrain";
    meta.seed = seed;
    meta.config["d_e"] = cfg.d_e;
    meta.config["epochs"] = cfg.epochs;
    meta.config["lr"] = cfg.lr;
    meta.config["weight_decay"] = cfg.weight_decay;
    meta.config["negatives_per_positive"] = cfg.negatives_per_positive;
    save_checkpoint(path, {{"item_table", &emb.item_table}, {"user_table", &emb.user_table}}, meta);
}

PreferenceEmbeddings import_embeddings(const std::string& path) {
    LoadedCheckpoint ck = load_checkpoint(path);
    if (ck.tensors.size() != 2 || !ck.tensors.count("user_table") || !ck.tensors.count("item_table"))
        throw FormatError(path + ": expected exactly {item_table, user_table}");
    PreferenceEmbeddings emb;
    emb.user_table = std::move(ck.tensors.at("user_table"));
    emb.item_table = std::move(ck.tensors.at("item_table"));
    if (emb.user_table.cols() != emb.item_table.cols())
        throw FormatError(path + ": user/item embedding widths differ");
    return emb;
}

}  // namespace bundlenat
