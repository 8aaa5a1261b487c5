#include "bundlenat/training.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "bundlenat/errors.hpp"
#include "bundlenat/metrics.hpp"

namespace bundlenat {

Var bundle_bce_loss(Ctx& ctx, const Var& h_o, const GenerationInstance& inst) {
    return bce_over_candidates(ctx, h_o, inst.candidates, inst.bundle);
}

void adam_step(ParamStore& params, const AdamOptions& opts) {
    for (auto& [name, e] : params)
        if (!e.grad_valid) throw StateError("adam_step: no gradient for " + name + "; run backward first");
    params.adam_t += 1;
    const double bc1 = 1.0 - std::pow(opts.beta1, static_cast<double>(params.adam_t));
    const double bc2 = 1.0 - std::pow(opts.beta2, static_cast<double>(params.adam_t));
    for (auto& [name, e] : params) {
        if (e.adam_m.size() != e.value.size()) {
            e.adam_m = Tensor(e.value.rows(), e.value.cols());
            e.adam_v = Tensor(e.value.rows(), e.value.cols());
        }
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            const double g = e.grad.data()[i] + opts.weight_decay * e.value.data()[i];
            double& m = e.adam_m.data()[i];
            double& v = e.adam_v.data()[i];
            m = opts.beta1 * m + (1.0 - opts.beta1) * g;
            v = opts.beta2 * v + (1.0 - opts.beta2) * g * g;
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            e.value.data()[i] -= opts.lr * m_hat / (std::sqrt(v_hat) + opts.eps);
        }
        e.grad_valid = false;
    }
}

TrainResult train(const DatasetSplit& split, const PreferenceEmbeddings& pref,
                  const CooccurrenceGraph& graph, const TrainConfig& cfg) {
    if (cfg.model.use_pref && pref.d_e() != cfg.model.d_e)
        throw ConfigError("train: preference width " + std::to_string(pref.d_e()) +
                          " does not match --dim " + std::to_string(cfg.model.d_e));
    if (cfg.model.use_compat && graph.n_items() != cfg.model.n_items)
        throw ConfigError("train: graph covers " + std::to_string(graph.n_items()) +
                          " items, config expects " + std::to_string(cfg.model.n_items));
    if (cfg.batch < 1) throw ConfigError("train: batch must be >= 1");
    for (const auto& inst : split.train)
        for (int c : inst.candidates)
            if (c < 0 || c >= cfg.model.n_items)
                throw RangeError("train: candidate id " + std::to_string(c) + " outside vocabulary");

    TrainResult res{init_model(cfg.model, cfg.seed), {}};
    Model& model = res.model;
    Rng rng(cfg.seed);

    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    const AdamOptions adam{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay};
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng e_rng = rng.split("epoch").split(static_cast<std::uint64_t>(epoch));
        e_rng.shuffle(order);
        Rng drop_rng = e_rng.split("dropout");
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
            Tape tape;
            Ctx ctx{&tape, /*training=*/true, &drop_rng};
            Var c_cache;  // one GNN propagation per batch
            std::vector<Var> losses;
            for (std::size_t r = start; r < end; ++r) {
                const GenerationInstance& inst = split.train[order[r]];
                Var h_o = model_scores(ctx, model, &pref, &graph, inst, &c_cache);
                losses.push_back(bundle_bce_loss(ctx, h_o, inst));
            }
            Var total = (losses.size() == 1)
                            ? losses[0]
                            : scale(ctx, add_n(ctx, losses), 1.0 / static_cast<double>(losses.size()));
            const double value = total->value.item();
            if (!std::isfinite(value))
                throw NumericError("train: loss diverged (NaN/Inf) at epoch " + std::to_string(epoch) +
                                   "; try a smaller --lr");
            loss_sum += value * static_cast<double>(losses.size());
            tape.backward(total, model.params);
            adam_step(model.params, adam);
        }
        res.epoch_losses.push_back(loss_sum / static_cast<double>(std::max<std::size_t>(order.size(), 1)));
    }
    return res;
}

void write_loss_log(const std::string& path, const std::vector<double>& losses) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    char buf[64];
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, losses[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

GridResult grid_search(const DatasetSplit& split, const PreferenceEmbeddings& pref,
                       const CooccurrenceGraph& graph, const TrainConfig& base, const GridSpec& grid,
                       int jobs) {
    if (grid.lrs.empty() || grid.dropouts.empty() || grid.weight_decays.empty())
        throw ConfigError("grid_search: empty grid");
    if (split.train.size() < 2) throw ArgumentError("grid_search: need at least 2 training instances");

    // Hold out 10% of train for selection; the test split stays untouched.
    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng holdout_rng = Rng(base.seed).split("grid-holdout");
    holdout_rng.shuffle(order);
    const std::size_t n_hold = std::max<std::size_t>(1, split.train.size() / 10);

    DatasetSplit inner;
    inner.k = split.k;
    inner.m = split.m;
    inner.n_users = split.n_users;
    inner.n_items = split.n_items;
    inner.n_bundles = split.n_bundles;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (r < n_hold)
            inner.test.push_back(split.train[order[r]]);
        else
            inner.train.push_back(split.train[order[r]]);
    }

    std::vector<GridRow> rows;
    for (double lr : grid.lrs)
        for (double dropout : grid.dropouts)
            for (double wd : grid.weight_decays) rows.push_back({lr, dropout, wd, 0.0, 0.0});

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= rows.size()) return;
            GridRow& row = rows[idx];
            TrainConfig pc = base;
            pc.lr = row.lr;
            pc.model.dropout = row.dropout;
            pc.weight_decay = row.weight_decay;
            TrainResult tr = train(inner, pref, graph, pc);
            std::vector<std::vector<int>> predicted =
                predict_bundles(tr.model, &pref, &graph, inner.test, inner.k);
            std::vector<std::vector<int>> truth;
            truth.reserve(inner.test.size());
            for (const auto& inst : inner.test) truth.push_back(inst.bundle);
            row.recall_at_k = recall_at_k(predicted, truth, inner.k);
            row.final_loss = tr.epoch_losses.empty() ? 0.0 : tr.epoch_losses.back();
        }
    };

    const int n_workers = std::max(1, std::min<int>(jobs, static_cast<int>(rows.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(n_workers));
        for (int t = 0; t < n_workers; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    GridResult res;
    res.rows = std::move(rows);
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        if (res.rows[i].recall_at_k > res.rows[res.best_index].recall_at_k) res.best_index = i;
    return res;
}

void write_grid_table(const std::string& path, const GridResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "lr,dropout,weight_decay,recall_at_k,final_loss\n";
    char buf[160];
    for (const GridRow& r : result.rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.lr, r.dropout,
                      r.weight_decay, r.recall_at_k, r.final_loss);
        out << buf;
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace bundlenat
