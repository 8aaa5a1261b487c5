#include "bundlenat/instances.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

constexpr const char* kInstanceTag = "#bundlenat-inst v1";
constexpr const char* kBundleIdTag = "#bundlenat-bundles v1";

std::vector<int> parse_id_list(const std::string& s, const std::string& where) {
    std::vector<int> out;
    if (s.empty()) return out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        const std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ParseError(where + ": bad id \"" + tok + "\"");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void validate_instance(const GenerationInstance& inst, int k, int m, const std::string& where) {
    if (static_cast<int>(inst.candidates.size()) != m)
        throw DataError(where + ": expected " + std::to_string(m) + " candidates, got " +
                        std::to_string(inst.candidates.size()));
    if (static_cast<int>(inst.bundle.size()) != k)
        throw DataError(where + ": expected bundle of " + std::to_string(k) + ", got " +
                        std::to_string(inst.bundle.size()));
    std::set<int> cand(inst.candidates.begin(), inst.candidates.end());
    if (cand.size() != inst.candidates.size()) throw DataError(where + ": duplicate candidate ids");
    std::set<int> bun(inst.bundle.begin(), inst.bundle.end());
    if (bun.size() != inst.bundle.size()) throw DataError(where + ": duplicate bundle ids");
    for (int b : inst.bundle)
        if (!cand.count(b)) throw DataError(where + ": bundle item " + std::to_string(b) + " not among candidates");
}

}  // namespace

std::vector<GenerationInstance> build_instances(const InteractionTables& tables, int k, int m, Rng rng,
                                                BuildStats* stats, std::vector<int>* bundle_ids_out) {
    if (k <= 0 || m <= k) throw ConfigError("build_instances: need 0 < k < m");
    if (m > tables.n_items)
        throw ConfigError("build_instances: m=" + std::to_string(m) + " exceeds item vocabulary " +
                          std::to_string(tables.n_items));

    std::map<int, std::vector<int>> bundles_of_user;
    for (const auto& [u, b] : tables.user_bundle) bundles_of_user[u].push_back(b);
    std::map<int, std::vector<int>> items_of_bundle;
    for (const auto& [b, v] : tables.bundle_item) items_of_bundle[b].push_back(v);

    std::vector<GenerationInstance> out;
    BuildStats local;
    for (auto& [user, bundles] : bundles_of_user) {
        Rng user_rng = rng.split(static_cast<std::uint64_t>(user));
        std::sort(bundles.begin(), bundles.end());
        std::set<std::vector<int>> seen;  // sorted sampled k-sets, per user
        for (int bundle_id : bundles) {
            auto it = items_of_bundle.find(bundle_id);
            const std::vector<int>* items = (it == items_of_bundle.end()) ? nullptr : &it->second;
            if (!items || static_cast<int>(items->size()) < k) {
                ++local.skipped_small_bundles;
                continue;
            }
            // K positives without replacement; sampling order is the stored
            // bundle order.
            std::vector<int> pool = *items;
            std::sort(pool.begin(), pool.end());
            std::vector<int> sampled;
            sampled.reserve(static_cast<std::size_t>(k));
            for (int t = 0; t < k; ++t) {
                const std::size_t j = static_cast<std::size_t>(t) +
                                      user_rng.next_below(pool.size() - static_cast<std::size_t>(t));
                std::swap(pool[static_cast<std::size_t>(t)], pool[j]);
                sampled.push_back(pool[static_cast<std::size_t>(t)]);
            }
            std::vector<int> key = sampled;
            std::sort(key.begin(), key.end());
            if (!seen.insert(key).second) {
                ++local.duplicates_removed;
                continue;
            }

            std::set<int> used(sampled.begin(), sampled.end());
            std::vector<int> negatives;
            negatives.reserve(static_cast<std::size_t>(m - k));
            while (static_cast<int>(negatives.size()) < m - k) {
                const int cand = user_rng.next_int(tables.n_items);
                if (used.insert(cand).second) negatives.push_back(cand);
            }

            // Uniform positions for the positives.
            std::vector<int> slots(static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i) slots[static_cast<std::size_t>(i)] = i;
            std::vector<int> pos_slots;
            pos_slots.reserve(static_cast<std::size_t>(k));
            for (int t = 0; t < k; ++t) {
                const std::size_t j = static_cast<std::size_t>(t) +
                                      user_rng.next_below(slots.size() - static_cast<std::size_t>(t));
                std::swap(slots[static_cast<std::size_t>(t)], slots[j]);
                pos_slots.push_back(slots[static_cast<std::size_t>(t)]);
            }

            GenerationInstance inst;
            inst.user_id = user;
            inst.candidates.assign(static_cast<std::size_t>(m), -1);
            for (int t = 0; t < k; ++t)
                inst.candidates[static_cast<std::size_t>(pos_slots[static_cast<std::size_t>(t)])] =
                    sampled[static_cast<std::size_t>(t)];
            std::size_t neg_idx = 0;
            for (int i = 0; i < m; ++i) {
                if (inst.candidates[static_cast<std::size_t>(i)] < 0)
                    inst.candidates[static_cast<std::size_t>(i)] = negatives[neg_idx++];
            }
            inst.bundle = sampled;
            out.push_back(std::move(inst));
            if (bundle_ids_out) bundle_ids_out->push_back(bundle_id);
        }
    }
    if (stats) *stats = local;
    return out;
}

DatasetSplit split_80_20(std::vector<GenerationInstance> instances, int k, int m,
                         const InteractionTables& tables, Rng rng, const std::vector<int>* bundle_ids,
                         std::vector<int>* train_bundle_ids_out) {
    if (instances.size() < 5) throw ArgumentError("split_80_20: need at least 5 instances");
    if (bundle_ids && bundle_ids->size() != instances.size())
        throw ArgumentError("split_80_20: bundle id list size mismatch");

    std::vector<std::size_t> order(instances.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);

    const std::size_t n_train = (instances.size() * 8) / 10;
    DatasetSplit split;
    split.k = k;
    split.m = m;
    split.n_users = tables.n_users;
    split.n_items = tables.n_items;
    split.n_bundles = tables.n_bundles;
    std::set<int> train_bundles;
    for (std::size_t r = 0; r < order.size(); ++r) {
        const std::size_t i = order[r];
        if (r < n_train) {
            split.train.push_back(std::move(instances[i]));
            if (bundle_ids) train_bundles.insert((*bundle_ids)[i]);
        } else {
            split.test.push_back(std::move(instances[i]));
        }
    }
    if (train_bundle_ids_out) train_bundle_ids_out->assign(train_bundles.begin(), train_bundles.end());
    return split;
}

std::string format_instance_line(const GenerationInstance& inst) {
    std::ostringstream ss;
    ss << "u=" << inst.user_id << "|c=";
    for (std::size_t i = 0; i < inst.candidates.size(); ++i) {
        if (i) ss << ',';
        ss << inst.candidates[i];
    }
    ss << "|b=";
    for (std::size_t i = 0; i < inst.bundle.size(); ++i) {
        if (i) ss << ',';
        ss << inst.bundle[i];
    }
    return ss.str();
}

GenerationInstance parse_instance_line(const std::string& line, const std::string& where) {
    const std::size_t p1 = line.find('|');
    const std::size_t p2 = (p1 == std::string::npos) ? std::string::npos : line.find('|', p1 + 1);
    if (p1 == std::string::npos || p2 == std::string::npos || line.rfind("u=", 0) != 0 ||
        line.compare(p1 + 1, 2, "c=") != 0 || line.compare(p2 + 1, 2, "b=") != 0)
        throw ParseError(where + ": malformed instance line \"" + line + "\"");
    GenerationInstance inst;
    try {
        std::size_t used = 0;
        const std::string utok = line.substr(2, p1 - 2);
        inst.user_id = std::stoi(utok, &used);
        if (used != utok.size() || inst.user_id < 0) throw std::invalid_argument(utok);
    } catch (const std::exception&) {
        throw ParseError(where + ": bad user id");
    }
    inst.candidates = parse_id_list(line.substr(p1 + 3, p2 - p1 - 3), where);
    inst.bundle = parse_id_list(line.substr(p2 + 3), where);
    return inst;
}

void write_instance_file(const std::string& path, const std::vector<GenerationInstance>& instances, int k,
                         int m) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << kInstanceTag << " k=" << k << " m=" << m << '\n';
    for (const auto& inst : instances) out << format_instance_line(inst) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::vector<GenerationInstance> read_instance_file(const std::string& path, int* k_out, int* m_out) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw FormatError(path + ": empty file");
    int k = 0, m = 0;
    {
        std::istringstream ss(header);
        std::string tag, version, ktok, mtok;
        ss >> tag >> version >> ktok >> mtok;
        if (tag + " " + version != kInstanceTag)
            throw FormatError(path + ": version tag mismatch, expected \"" + kInstanceTag + "\"");
        if (ktok.rfind("k=", 0) != 0 || mtok.rfind("m=", 0) != 0)
            throw FormatError(path + ": malformed header \"" + header + "\"");
        k = std::stoi(ktok.substr(2));
        m = std::stoi(mtok.substr(2));
    }
    std::vector<GenerationInstance> out;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::string where = path + ":" + std::to_string(line_no);
        GenerationInstance inst = parse_instance_line(line, where);
        validate_instance(inst, k, m, where);
        out.push_back(std::move(inst));
    }
    if (k_out) *k_out = k;
    if (m_out) *m_out = m;
    return out;
}

void write_instances(const DatasetSplit& split, const std::string& dir) {
    write_instance_file(dir + "/train.inst", split.train, split.k, split.m);
    write_instance_file(dir + "/test.inst", split.test, split.k, split.m);
}

DatasetSplit read_instances(const std::string& dir) {
    DatasetSplit split;
    int k1 = 0, m1 = 0, k2 = 0, m2 = 0;
    split.train = read_instance_file(dir + "/train.inst", &k1, &m1);
    split.test = read_instance_file(dir + "/test.inst", &k2, &m2);
    if (k1 != k2 || m1 != m2)
        throw FormatError(dir + ": train/test headers disagree on k or m");
    split.k = k1;
    split.m = m1;
    int max_user = -1, max_item = -1;
    for (const auto* part : {&split.train, &split.test}) {
        for (const auto& inst : *part) {
            max_user = std::max(max_user, inst.user_id);
            for (int c : inst.candidates) max_item = std::max(max_item, c);
        }
    }
    split.n_users = max_user + 1;
    split.n_items = max_item + 1;
    return split;
}

void write_bundle_id_file(const std::string& path, const std::vector<int>& ids) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << kBundleIdTag << '\n';
    for (int id : ids) out << id << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::vector<int> read_bundle_id_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string header;
    if (!std::getline(in, header) || header != kBundleIdTag)
        throw FormatError(path + ": version tag mismatch, expected \"" + std::string(kBundleIdTag) + "\"");
    std::vector<int> ids;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        try {
            ids.push_back(std::stoi(line));
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad bundle id \"" + line + "\"");
        }
    }
    return ids;
}

}  // namespace bundlenat
