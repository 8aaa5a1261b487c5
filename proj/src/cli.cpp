#include "bundlenat/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bundlenat/checkpoint.hpp"
#include "bundlenat/compat_graph.hpp"
#include "bundlenat/errors.hpp"
#include "bundlenat/instances.hpp"
#include "bundlenat/interactions.hpp"
#include "bundlenat/metrics.hpp"
#include "bundlenat/model.hpp"
#include "bundlenat/pretrain.hpp"
#include "bundlenat/synth.hpp"
#include "bundlenat/training.hpp"

namespace bundlenat {

namespace {

int env_threads() {
    const char* v = std::getenv("BUNDLENAT_THREADS");
    if (!v) return 1;
    try {
        return std::max(1, std::stoi(v));
    } catch (const std::exception&) {
        return 1;
    }
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    return out;
}

struct TrainFlags {
    std::string data_dir;
    std::string embeddings_path;
    std::string graph_path;
    int dim = 64;
    int gnn_layers = 2;
    int depth = 2;
    int heads = 4;
    int ffn_mult = 4;
    double dropout = 0.0;
    double lr = 1e-3;
    double weight_decay = 1e-5;
    int epochs = 10;
    int batch = 1;
    bool layer_norm = false;
    bool no_pref = false;
    bool no_compat = false;
    std::uint64_t seed = 42;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--data", f.data_dir, "directory with train.inst/test.inst")->required();
    cmd->add_option("--embeddings", f.embeddings_path, "pretrained preference checkpoint")->required();
    cmd->add_option("--graph", f.graph_path, "co-occurrence graph file");
    cmd->add_option("--dim", f.dim, "preference embedding size d_e")->capture_default_str();
    cmd->add_option("--gnn-layers", f.gnn_layers, "GNN propagation layers")->capture_default_str();
    cmd->add_option("--depth", f.depth, "encoder/decoder block count")->capture_default_str();
    cmd->add_option("--heads", f.heads, "attention heads")->capture_default_str();
    cmd->add_option("--ffn-mult", f.ffn_mult, "encoder FFN width multiplier")->capture_default_str();
    cmd->add_option("--dropout", f.dropout, "dropout ratio")->capture_default_str();
    cmd->add_option("--lr", f.lr, "learning rate")->capture_default_str();
    cmd->add_option("--weight-decay", f.weight_decay, "L2 coefficient")->capture_default_str();
    cmd->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
    cmd->add_option("--batch", f.batch, "instances aggregated per update")->capture_default_str();
    cmd->add_flag("--layernorm", f.layer_norm, "enable per-row layer normalization");
    cmd->add_flag("--no-pref", f.no_pref, "ablation: zero the preference signal");
    cmd->add_flag("--no-compat", f.no_compat, "ablation: zero the compatibility signal");
    cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
}

struct LoadedPipelineInputs {
    DatasetSplit split;
    PreferenceEmbeddings pref;
    CooccurrenceGraph graph;
    TrainConfig cfg;
};

LoadedPipelineInputs load_pipeline_inputs(const TrainFlags& f) {
    LoadedPipelineInputs in;
    in.split = read_instances(f.data_dir);
    in.pref = import_embeddings(f.embeddings_path);
    if (in.pref.d_e() != f.dim)
        throw ConfigError("--dim " + std::to_string(f.dim) + " does not match embedding checkpoint width " +
                          std::to_string(in.pref.d_e()));
    in.cfg.model.d_e = f.dim;
    in.cfg.model.gnn_layers = f.gnn_layers;
    in.cfg.model.depth = f.depth;
    in.cfg.model.heads = f.heads;
    in.cfg.model.ffn_mult = f.ffn_mult;
    in.cfg.model.dropout = f.dropout;
    in.cfg.model.layer_norm = f.layer_norm;
    in.cfg.model.use_pref = !f.no_pref;
    in.cfg.model.use_compat = !f.no_compat;
    in.cfg.model.n_users = static_cast<int>(in.pref.user_table.rows());
    in.cfg.lr = f.lr;
    in.cfg.weight_decay = f.weight_decay;
    in.cfg.epochs = f.epochs;
    in.cfg.batch = f.batch;
    in.cfg.seed = f.seed;
    if (in.cfg.model.use_compat) {
        if (f.graph_path.empty()) throw ConfigError("--graph is required unless --no-compat is given");
        in.graph = load_graph(f.graph_path);
        in.cfg.model.n_items = in.graph.n_items();
    } else {
        in.cfg.model.n_items = static_cast<int>(in.pref.item_table.rows());
    }
    return in;
}

void prepare_and_write(const InteractionTables& tables, int k, int m, std::uint64_t seed,
                       const std::string& out_dir) {
    Rng rng(seed);
    BuildStats stats;
    std::vector<int> bundle_ids;
    std::vector<GenerationInstance> instances =
        build_instances(tables, k, m, rng.split("instances"), &stats, &bundle_ids);
    std::vector<int> train_bundle_ids;
    DatasetSplit split =
        split_80_20(std::move(instances), k, m, tables, rng.split("split"), &bundle_ids, &train_bundle_ids);
    write_instances(split, out_dir);
    write_bundle_id_file(out_dir + "/train_bundles.ids", train_bundle_ids);
    std::cout << "instances: train=" << split.train.size() << " test=" << split.test.size()
              << " (skipped " << stats.skipped_small_bundles << " undersized bundles, removed "
              << stats.duplicates_removed << " per-user duplicates)\n";
}

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"BundleNAT: non-autoregressive personalized bundle generation"};
    app.require_subcommand(1);
    int threads = env_threads();
    app.add_option("--threads", threads, "worker threads for parallel stages")->capture_default_str();

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a planted-structure dataset");
    SynthConfig sc;
    std::string synth_out;
    synth->add_option("--users", sc.n_users)->capture_default_str();
    synth->add_option("--items", sc.n_items)->capture_default_str();
    synth->add_option("--clusters", sc.n_clusters)->capture_default_str();
    synth->add_option("--bundles-per-user", sc.bundles_per_user)->capture_default_str();
    synth->add_option("--bundle-size", sc.k, "ground-truth bundle size K")->capture_default_str();
    synth->add_option("--candidates", sc.m, "candidate set size M")->capture_default_str();
    synth->add_option("--noise", sc.noise_rate, "per-item swap probability")->capture_default_str();
    synth->add_option("--catalog-per-cluster", sc.catalog_per_cluster)->capture_default_str();
    synth->add_option("--extra-per-cluster", sc.extra_per_cluster)->capture_default_str();
    synth->add_option("--seed", sc.seed)->capture_default_str();
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->callback([&]() {
        std::filesystem::create_directories(synth_out);
        SynthResult res = synth_planted(sc);
        write_tables(res.tables, synth_out);
        write_cluster_map(synth_out + "/clusters.tsv", res.item_cluster);
        std::cout << "tables: users=" << res.tables.n_users << " items=" << res.tables.n_items
                  << " bundles=" << res.tables.n_bundles << " ui=" << res.tables.user_item.size()
                  << " ub=" << res.tables.user_bundle.size() << " bi=" << res.tables.bundle_item.size()
                  << "\n";
        prepare_and_write(res.tables, sc.k, sc.m, sc.seed, synth_out);
    });

    // ---- prepare ----
    auto* prepare = app.add_subcommand("prepare", "build generation instances from raw tables");
    std::string prep_tables, prep_out;
    int prep_k = 5, prep_m = 100, prep_users = -1, prep_items = -1, prep_bundles = -1;
    std::uint64_t prep_seed = 7;
    prepare->add_option("--tables", prep_tables, "directory with the three .tsv relations")->required();
    prepare->add_option("--bundle-size", prep_k)->capture_default_str();
    prepare->add_option("--candidates", prep_m)->capture_default_str();
    prepare->add_option("--users", prep_users, "declared user vocabulary (validated)");
    prepare->add_option("--items", prep_items, "declared item vocabulary (validated)");
    prepare->add_option("--bundles", prep_bundles, "declared bundle vocabulary (validated)");
    prepare->add_option("--seed", prep_seed)->capture_default_str();
    prepare->add_option("--out", prep_out, "output directory")->required();
    prepare->callback([&]() {
        std::filesystem::create_directories(prep_out);
        InteractionTables tables =
            load_tables(prep_tables + "/user_item.tsv", prep_tables + "/user_bundle.tsv",
                        prep_tables + "/bundle_item.tsv", prep_users, prep_items, prep_bundles);
        std::cout << "loaded: users=" << tables.n_users << " items=" << tables.n_items
                  << " bundles=" << tables.n_bundles << "\n";
        prepare_and_write(tables, prep_k, prep_m, prep_seed, prep_out);
    });

    // ---- pretrain ----
    auto* pretrain = app.add_subcommand("pretrain", "matrix-factorization BPR preference embeddings");
    std::string pt_tables, pt_out;
    PretrainConfig pt_cfg;
    int pt_auc_negatives = 100;
    bool pt_no_holdout = false;
    pretrain->add_option("--tables", pt_tables, "directory with user_item.tsv")->required();
    pretrain->add_option("--dim", pt_cfg.d_e, "embedding size d_e")->capture_default_str();
    pretrain->add_option("--epochs", pt_cfg.epochs)->capture_default_str();
    pretrain->add_option("--lr", pt_cfg.lr)->capture_default_str();
    pretrain->add_option("--weight-decay", pt_cfg.weight_decay)->capture_default_str();
    pretrain->add_option("--negatives", pt_cfg.negatives_per_positive)->capture_default_str();
    pretrain->add_option("--auc-negatives", pt_auc_negatives, "sampled negatives per held-out pair")
        ->capture_default_str();
    pretrain->add_flag("--no-holdout", pt_no_holdout, "train on all interactions, skip the AUC report");
    pretrain->add_option("--seed", pt_cfg.seed)->capture_default_str();
    pretrain->add_option("--out", pt_out, "embedding checkpoint path")->required();
    pretrain->callback([&]() {
        InteractionTables tables = load_tables(pt_tables + "/user_item.tsv", pt_tables + "/user_bundle.tsv",
                                               pt_tables + "/bundle_item.tsv");
        Rng rng(pt_cfg.seed);
        if (pt_no_holdout) {
            PretrainResult res = train_mf_bpr(tables, pt_cfg);
            export_embeddings(res.emb, pt_out, pt_cfg.seed, pt_cfg);
            std::cout << "pretrain: final loss=" << (res.epoch_losses.empty() ? 0.0 : res.epoch_losses.back())
                      << "\n";
            return;
        }
        LeaveOneOut loo = leave_one_out_split(tables.user_item, rng.split("loo"));
        InteractionTables train_tables = tables;
        train_tables.user_item = loo.train;
        PretrainResult res = train_mf_bpr(train_tables, pt_cfg);
        const double auc = auc_eval(res.emb, loo.held_out, tables.user_item, pt_auc_negatives,
                                    rng.split("auc"));
        export_embeddings(res.emb, pt_out, pt_cfg.seed, pt_cfg);
        std::cout << "pretrain: final loss="
                  << (res.epoch_losses.empty() ? 0.0 : res.epoch_losses.back()) << " held-out AUC=" << auc
                  << "\n";
    });

    // ---- build-graph ----
    auto* graph_cmd = app.add_subcommand("build-graph", "normalized item co-occurrence graph");
    std::string bg_tables, bg_out, bg_filter;
    int bg_items = -1;
    std::uint64_t bg_seed = 0;
    graph_cmd->add_option("--tables", bg_tables, "directory with bundle_item.tsv")->required();
    graph_cmd->add_option("--bundles-filter", bg_filter,
                          "restrict to the bundle ids in this file (train-only support)");
    graph_cmd->add_option("--items", bg_items, "declared item vocabulary");
    graph_cmd->add_option("--seed", bg_seed)->capture_default_str();
    graph_cmd->add_option("--out", bg_out, "graph checkpoint path")->required();
    graph_cmd->callback([&]() {
        InteractionTables tables = load_tables(bg_tables + "/user_item.tsv", bg_tables + "/user_bundle.tsv",
                                               bg_tables + "/bundle_item.tsv", -1, bg_items);
        std::vector<int> filter;
        const std::vector<int>* filter_ptr = nullptr;
        if (!bg_filter.empty()) {
            filter = read_bundle_id_file(bg_filter);
            filter_ptr = &filter;
        }
        Tensor f = build_frequency_matrix(tables.bundle_item, tables.n_items, tables.n_bundles, filter_ptr);
        CooccurrenceGraph graph = normalize_cooccurrence(f);
        save_graph(bg_out, graph, bg_seed);
        std::size_t nnz = 0;
        for (double v : graph.g().data())
            if (v != 0.0) ++nnz;
        std::cout << "graph: items=" << graph.n_items() << " nonzeros=" << nnz << "\n";
    });

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train the bundle generation model");
    TrainFlags tf;
    std::string train_out, loss_log_path;
    add_train_flags(train_cmd, tf);
    train_cmd->add_option("--out", train_out, "model checkpoint path")->required();
    train_cmd->add_option("--loss-log", loss_log_path, "per-epoch loss log (epoch,loss lines)");
    train_cmd->callback([&]() {
        LoadedPipelineInputs in = load_pipeline_inputs(tf);
        TrainResult res = train(in.split, in.pref, in.graph, in.cfg);
        save_model(train_out, res.model, in.cfg.seed);
        if (!loss_log_path.empty()) write_loss_log(loss_log_path, res.epoch_losses);
        std::cout << "train: epochs=" << res.epoch_losses.size() << " final loss="
                  << (res.epoch_losses.empty() ? 0.0 : res.epoch_losses.back()) << "\n";
    });

    // ---- gridsearch ----
    auto* grid_cmd = app.add_subcommand("gridsearch", "hyperparameter grid over lr/dropout/weight decay");
    TrainFlags gf;
    std::string grid_out;
    std::string grid_lr = "1e-4,1e-3,1e-2,1e-1";
    std::string grid_dropout = "0.0,0.1,0.2,0.3,0.4";
    std::string grid_wd = "1e-5,1e-4,1e-3,1e-2,1e-1";
    int jobs = 0;
    add_train_flags(grid_cmd, gf);
    grid_cmd->add_option("--grid-lr", grid_lr, "comma-separated learning rates")->capture_default_str();
    grid_cmd->add_option("--grid-dropout", grid_dropout, "comma-separated dropout ratios")->capture_default_str();
    grid_cmd->add_option("--grid-wd", grid_wd, "comma-separated weight decays")->capture_default_str();
    grid_cmd->add_option("--jobs", jobs, "parallel training jobs (default --threads)");
    grid_cmd->add_option("--out", grid_out, "results table path")->required();
    grid_cmd->callback([&]() {
        LoadedPipelineInputs in = load_pipeline_inputs(gf);
        GridSpec spec;
        spec.lrs = parse_double_list(grid_lr);
        spec.dropouts = parse_double_list(grid_dropout);
        spec.weight_decays = parse_double_list(grid_wd);
        GridResult res = grid_search(in.split, in.pref, in.graph, in.cfg, spec,
                                     jobs > 0 ? jobs : threads);
        write_grid_table(grid_out, res);
        const GridRow& best = res.rows[res.best_index];
        std::cout << "gridsearch: " << res.rows.size() << " points; best lr=" << best.lr
                  << " dropout=" << best.dropout << " weight_decay=" << best.weight_decay
                  << " recall@" << in.split.k << "=" << best.recall_at_k << "\n";
    });

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "bundle metrics, baselines and latency accounting");
    std::string ev_data, ev_model, ev_emb, ev_graph, ev_out;
    std::string ev_baselines = "pop,bpr";
    std::string ev_mode = "first-match";
    std::string ev_latency_ks;
    bool ev_include_instances = false;
    eval_cmd->add_option("--data", ev_data, "directory with train.inst/test.inst")->required();
    eval_cmd->add_option("--model", ev_model, "trained model checkpoint")->required();
    eval_cmd->add_option("--embeddings", ev_emb, "preference checkpoint")->required();
    eval_cmd->add_option("--graph", ev_graph, "co-occurrence graph file");
    eval_cmd->add_option("--baselines", ev_baselines, "comma-separated subset of pop,bpr")->capture_default_str();
    eval_cmd->add_option("--precision-mode", ev_mode, "first-match or member")->capture_default_str();
    eval_cmd->add_option("--latency-ks", ev_latency_ks, "comma-separated k values for pass counting");
    eval_cmd->add_flag("--include-instances", ev_include_instances, "per-instance records in the report");
    eval_cmd->add_option("--out", ev_out, "report path")->required();
    eval_cmd->callback([&]() {
        DatasetSplit split = read_instances(ev_data);
        Model model = load_model(ev_model);
        PreferenceEmbeddings pref = import_embeddings(ev_emb);
        CooccurrenceGraph graph;
        if (model.cfg.use_compat) {
            if (ev_graph.empty()) throw ConfigError("--graph is required for a compatibility-enabled model");
            graph = load_graph(ev_graph);
        }
        PrecisionMode mode;
        if (ev_mode == "first-match")
            mode = PrecisionMode::FirstMatch;
        else if (ev_mode == "member")
            mode = PrecisionMode::Member;
        else
            throw ConfigError("--precision-mode must be first-match or member");
        if (split.test.empty()) throw DataError("eval: empty test split");

        EvalReport report;
        report.dataset["n_train"] = split.train.size();
        report.dataset["n_test"] = split.test.size();
        report.dataset["k"] = split.k;
        report.dataset["m"] = split.m;
        report.dataset["fingerprint"] = dataset_fingerprint(split);
        report.config["precision_mode"] = ev_mode;
        report.config["model"] = nlohmann::ordered_json{{"d_e", model.cfg.d_e},
                                                        {"gnn_layers", model.cfg.gnn_layers},
                                                        {"depth", model.cfg.depth},
                                                        {"heads", model.cfg.heads},
                                                        {"use_pref", model.cfg.use_pref},
                                                        {"use_compat", model.cfg.use_compat}};

        std::vector<std::vector<int>> predicted = predict_bundles(
            model, &pref, model.cfg.use_compat ? &graph : nullptr, split.test, split.k);
        report.methods.push_back(
            score_method("bundlenat", predicted, split.test, split.k, split.m, 1.0, mode));
        if (ev_include_instances) {
            for (std::size_t i = 0; i < split.test.size(); ++i) {
                nlohmann::ordered_json rec;
                rec["user"] = split.test[i].user_id;
                rec["predicted"] = predicted[i];
                rec["truth"] = split.test[i].bundle;
                report.instances.push_back(std::move(rec));
            }
        }

        std::stringstream bss(ev_baselines);
        std::string bname;
        while (std::getline(bss, bname, ',')) {
            if (bname.empty()) continue;
            RankingBaseline baseline;
            if (bname == "pop")
                baseline = pop_baseline(split.train);
            else if (bname == "bpr")
                baseline = bpr_baseline(pref);
            else
                throw ConfigError("unknown baseline: " + bname);
            std::vector<std::vector<int>> bp;
            bp.reserve(split.test.size());
            for (const auto& inst : split.test) bp.push_back(baseline.predict(inst, split.k));
            report.methods.push_back(score_method(baseline.name, bp, split.test, split.k, split.m, 0.0, mode));
        }

        if (!ev_latency_ks.empty()) {
            report.latency = latency_account(model, &pref, model.cfg.use_compat ? &graph : nullptr,
                                             split.test, parse_int_list(ev_latency_ks));
        }
        emit_report(report, ev_out);
        for (const MethodResult& m : report.methods)
            std::cout << m.method << ": precision@" << m.k << "=" << m.precision << " precision+@" << m.k
                      << "=" << m.precision_plus << " recall@" << m.k << "=" << m.recall << "\n";
    });

    // ---- infer ----
    auto* infer_cmd = app.add_subcommand("infer", "decode one instance given inline in train.inst format");
    std::string if_model, if_emb, if_graph, if_line;
    int if_k = 0;
    infer_cmd->add_option("--model", if_model)->required();
    infer_cmd->add_option("--embeddings", if_emb)->required();
    infer_cmd->add_option("--graph", if_graph);
    infer_cmd->add_option("--instance", if_line, "instance line u=...|c=...|b=...")->required();
    infer_cmd->add_option("-k,--bundle-size", if_k, "items to select (default: ground-truth size)");
    infer_cmd->callback([&]() {
        Model model = load_model(if_model);
        PreferenceEmbeddings pref = import_embeddings(if_emb);
        CooccurrenceGraph graph;
        if (model.cfg.use_compat) {
            if (if_graph.empty()) throw ConfigError("--graph is required for a compatibility-enabled model");
            graph = load_graph(if_graph);
        }
        GenerationInstance inst = parse_instance_line(if_line, "--instance");
        const int k = (if_k > 0) ? if_k : static_cast<int>(inst.bundle.size());
        if (k <= 0) throw ArgumentError("infer: pass -k or include a non-empty b= section");
        Ctx ctx;
        Var cache;
        DecodeResult res =
            model_decode(ctx, model, &pref, model.cfg.use_compat ? &graph : nullptr, inst, k, &cache);
        for (std::size_t i = 0; i < res.bundle.size(); ++i) {
            if (i) std::cout << ' ';
            std::cout << res.bundle[i];
        }
        std::cout << "\n";
    });

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("bundlenat");
    for (const std::string& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    try {
        return dispatch(args);
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace bundlenat
