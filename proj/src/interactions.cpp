#include "bundlenat/interactions.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

int infer_size(const std::vector<std::pair<int, int>>& a, bool first, int declared,
               const std::vector<std::pair<int, int>>& b = {}, bool b_first = true) {
    if (declared >= 0) return declared;
    int mx = -1;
    for (const auto& [x, y] : a) mx = std::max(mx, first ? x : y);
    for (const auto& [x, y] : b) mx = std::max(mx, b_first ? x : y);
    return mx + 1;
}

}  // namespace

std::vector<std::pair<int, int>> load_pair_file(const std::string& path, int max_first, int max_second) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::pair<int, int>> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        long a = 0, b = 0;
        std::string tail;
        if (!(ss >> a >> b) || (ss >> tail)) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected two integer columns, got \"" + line + "\"");
        }
        if (a < 0 || b < 0)
            throw ParseError(path + ":" + std::to_string(line_no) + ": negative id");
        if (max_first >= 0 && a >= max_first)
            throw RangeError(path + ":" + std::to_string(line_no) + ": id " + std::to_string(a) +
                             " >= declared vocabulary " + std::to_string(max_first));
        if (max_second >= 0 && b >= max_second)
            throw RangeError(path + ":" + std::to_string(line_no) + ": id " + std::to_string(b) +
                             " >= declared vocabulary " + std::to_string(max_second));
        pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

InteractionTables load_tables(const std::string& user_item_path, const std::string& user_bundle_path,
                              const std::string& bundle_item_path, int n_users, int n_items, int n_bundles) {
    InteractionTables t;
    t.user_item = load_pair_file(user_item_path, n_users, n_items);
    t.user_bundle = load_pair_file(user_bundle_path, n_users, n_bundles);
    t.bundle_item = load_pair_file(bundle_item_path, n_bundles, n_items);
    t.n_users = infer_size(t.user_item, true, n_users, t.user_bundle, true);
    t.n_items = infer_size(t.user_item, false, n_items, t.bundle_item, false);
    t.n_bundles = infer_size(t.user_bundle, false, n_bundles, t.bundle_item, true);
    return t;
}

void write_pair_file(const std::string& path, const std::vector<std::pair<int, int>>& pairs) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& [a, b] : pairs) out << a << '\t' << b << '\n';
    if (!out) throw IoError("write failed: " + path);
}

void write_tables(const InteractionTables& tables, const std::string& dir) {
    write_pair_file(dir + "/user_item.tsv", tables.user_item);
    write_pair_file(dir + "/user_bundle.tsv", tables.user_bundle);
    write_pair_file(dir + "/bundle_item.tsv", tables.bundle_item);
}

}  // namespace bundlenat
