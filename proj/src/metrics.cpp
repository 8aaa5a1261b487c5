#include "bundlenat/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

void check_bundle_lists(const std::vector<std::vector<int>>& predicted,
                        const std::vector<std::vector<int>>& truth) {
    if (predicted.empty() || truth.empty()) throw ArgumentError("metrics: empty bundle lists");
    if (predicted.size() != truth.size())
        throw ArgumentError("metrics: " + std::to_string(predicted.size()) + " predictions vs " +
                            std::to_string(truth.size()) + " truths");
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (predicted[i].empty() || truth[i].empty()) throw ArgumentError("metrics: empty bundle");
        if (predicted[i].size() != truth[i].size())
            throw ArgumentError("metrics: prediction/truth size mismatch at instance " + std::to_string(i));
    }
}

std::size_t intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
    std::set<int> sa(a.begin(), a.end());
    std::size_t n = 0;
    for (int v : b)
        if (sa.count(v)) ++n;
    return n;
}

}  // namespace

double precision_at_k(const std::vector<std::vector<int>>& predicted,
                      const std::vector<std::vector<int>>& truth, PrecisionMode mode) {
    check_bundle_lists(predicted, truth);
    double hits = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (mode == PrecisionMode::FirstMatch) {
            if (predicted[i][0] == truth[i][0]) hits += 1.0;
        } else {
            if (std::find(truth[i].begin(), truth[i].end(), predicted[i][0]) != truth[i].end()) hits += 1.0;
        }
    }
    return hits / static_cast<double>(predicted.size());
}

double precision_plus_at_k(const std::vector<std::vector<int>>& predicted,
                           const std::vector<std::vector<int>>& truth) {
    check_bundle_lists(predicted, truth);
    double hits = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (intersection_size(predicted[i], truth[i]) > 0) hits += 1.0;
    return hits / static_cast<double>(predicted.size());
}

double recall_at_k(const std::vector<std::vector<int>>& predicted,
                   const std::vector<std::vector<int>>& truth, int k) {
    check_bundle_lists(predicted, truth);
    if (k <= 0) throw ArgumentError("recall_at_k: k must be positive");
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        total += static_cast<double>(intersection_size(predicted[i], truth[i])) / static_cast<double>(k);
    return total / static_cast<double>(predicted.size());
}

std::vector<std::vector<int>> predict_bundles(Model& model, const PreferenceEmbeddings* pref,
                                              const CooccurrenceGraph* graph,
                                              const std::vector<GenerationInstance>& instances, int k) {
    std::vector<std::vector<int>> out;
    out.reserve(instances.size());
    Ctx ctx;  // inference mode
    Var c_cache;
    for (const auto& inst : instances)
        out.push_back(model_decode(ctx, model, pref, graph, inst, k, &c_cache).bundle);
    return out;
}

RankingBaseline pop_baseline(const std::vector<GenerationInstance>& train_instances) {
    auto counts = std::make_shared<std::map<int, std::int64_t>>();
    for (const auto& inst : train_instances)
        for (int v : inst.bundle) ++(*counts)[v];
    RankingBaseline b;
    b.name = "pop";
    b.predict = [counts](const GenerationInstance& inst, int k) {
        if (k <= 0 || static_cast<std::size_t>(k) > inst.candidates.size())
            throw ArgumentError("pop_baseline: bad k=" + std::to_string(k));
        std::vector<int> cands = inst.candidates;
        std::sort(cands.begin(), cands.end(), [&](int a, int c) {
            const std::int64_t ca = counts->count(a) ? counts->at(a) : 0;
            const std::int64_t cc = counts->count(c) ? counts->at(c) : 0;
            if (ca != cc) return ca > cc;
            return a < c;
        });
        cands.resize(static_cast<std::size_t>(k));
        return cands;
    };
    return b;
}

RankingBaseline bpr_baseline(const PreferenceEmbeddings& emb) {
    auto user = std::make_shared<Tensor>(emb.user_table);
    auto item = std::make_shared<Tensor>(emb.item_table);
    RankingBaseline b;
    b.name = "bpr";
    b.predict = [user, item](const GenerationInstance& inst, int k) {
        if (k <= 0 || static_cast<std::size_t>(k) > inst.candidates.size())
            throw ArgumentError("bpr_baseline: bad k=" + std::to_string(k));
        if (inst.user_id < 0 || static_cast<std::size_t>(inst.user_id) >= user->rows())
            throw RangeError("bpr_baseline: user id out of range");
        const double* eu = user->row(static_cast<std::size_t>(inst.user_id));
        const std::size_t d = user->cols();
        auto score = [&](int v) {
            const double* ev = item->row(static_cast<std::size_t>(v));
            double s = 0.0;
            for (std::size_t f = 0; f < d; ++f) s += eu[f] * ev[f];
            return s;
        };
        std::vector<int> cands = inst.candidates;
        std::sort(cands.begin(), cands.end(), [&](int a, int c) {
            const double sa = score(a), sc = score(c);
            if (sa != sc) return sa > sc;
            return a < c;
        });
        cands.resize(static_cast<std::size_t>(k));
        return cands;
    };
    return b;
}

std::vector<LatencyRow> latency_account(Model& model, const PreferenceEmbeddings* pref,
                                        const CooccurrenceGraph* graph,
                                        const std::vector<GenerationInstance>& instances,
                                        const std::vector<int>& k_values) {
    std::vector<LatencyRow> rows;
    Ctx ctx;
    Var c_cache;
    for (int k : k_values) {
        LatencyRow row;
        row.k = k;
        for (const auto& inst : instances) {
            Var xf = model_encode(ctx, model, pref, graph, inst, &c_cache);
            row.nat_passes += decode(ctx, model.params, model.cfg, xf, inst.candidates, k).decoder_passes;
            row.ar_passes +=
                decode_autoregressive_stub(ctx, model.params, model.cfg, xf, inst.candidates, k).decoder_passes;
            ++row.n_instances;
        }
        rows.push_back(row);
    }
    return rows;
}

MethodResult score_method(const std::string& name, const std::vector<std::vector<int>>& predicted,
                          const std::vector<GenerationInstance>& instances, int k, int m,
                          double passes_per_bundle, PrecisionMode mode) {
    std::vector<std::vector<int>> truth;
    truth.reserve(instances.size());
    for (const auto& inst : instances) truth.push_back(inst.bundle);
    MethodResult r;
    r.method = name;
    r.precision = precision_at_k(predicted, truth, mode);
    r.precision_plus = precision_plus_at_k(predicted, truth);
    r.recall = recall_at_k(predicted, truth, k);
    r.k = k;
    r.m = m;
    r.n_instances = instances.size();
    r.passes_per_bundle = passes_per_bundle;
    return r;
}

std::string dataset_fingerprint(const DatasetSplit& split) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto fold = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ULL;
        }
    };
    for (const auto* part : {&split.train, &split.test})
        for (const auto& inst : *part) fold(format_instance_line(inst) + "\n");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = "bundlenat-report v1";
    j["dataset"] = dataset;
    j["config"] = config;
    nlohmann::ordered_json ms = nlohmann::ordered_json::array();
    for (const MethodResult& r : methods) {
        nlohmann::ordered_json m;
        m["method"] = r.method;
        m["precision"] = r.precision;
        m["precision_plus"] = r.precision_plus;
        m["recall"] = r.recall;
        m["k"] = r.k;
        m["m"] = r.m;
        m["n_instances"] = r.n_instances;
        m["passes_per_bundle"] = r.passes_per_bundle;
        ms.push_back(std::move(m));
    }
    j["methods"] = std::move(ms);
    nlohmann::ordered_json lat = nlohmann::ordered_json::array();
    for (const LatencyRow& r : latency) {
        nlohmann::ordered_json l;
        l["k"] = r.k;
        l["nat_passes"] = r.nat_passes;
        l["ar_passes"] = r.ar_passes;
        l["n_instances"] = r.n_instances;
        lat.push_back(std::move(l));
    }
    j["latency"] = std::move(lat);
    if (!instances.empty()) j["instances"] = instances;
    return j;
}

void emit_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << report.to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

EvalReport parse_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw FormatError(path + ": bad report JSON: " + e.what());
    }
    if (j.value("version", "") != "bundlenat-report v1")
        throw FormatError(path + ": report version mismatch");
    EvalReport r;
    r.dataset = j.value("dataset", nlohmann::ordered_json::object());
    r.config = j.value("config", nlohmann::ordered_json::object());
    for (const auto& m : j.at("methods")) {
        MethodResult mr;
        mr.method = m.at("method").get<std::string>();
        mr.precision = m.at("precision").get<double>();
        mr.precision_plus = m.at("precision_plus").get<double>();
        mr.recall = m.at("recall").get<double>();
        mr.k = m.at("k").get<int>();
        mr.m = m.at("m").get<int>();
        mr.n_instances = m.at("n_instances").get<std::size_t>();
        mr.passes_per_bundle = m.at("passes_per_bundle").get<double>();
        r.methods.push_back(std::move(mr));
    }
    for (const auto& l : j.value("latency", nlohmann::ordered_json::array())) {
        LatencyRow lr;
        lr.k = l.at("k").get<int>();
        lr.nat_passes = l.at("nat_passes").get<std::int64_t>();
        lr.ar_passes = l.at("ar_passes").get<std::int64_t>();
        lr.n_instances = l.at("n_instances").get<std::size_t>();
        r.latency.push_back(lr);
    }
    if (j.contains("instances")) r.instances = j.at("instances");
    return r;
}

}  // namespace bundlenat
