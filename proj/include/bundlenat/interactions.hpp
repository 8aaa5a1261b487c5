#pragma once

#include <string>
#include <utility>
#include <vector>

namespace bundlenat {

// The three raw relations as deduplicated (id, id) pair lists, ids contiguous
// from 0. Vocabulary sizes are either declared by the caller or inferred as
// max id + 1 across the relevant columns.
struct InteractionTables {
    std::vector<std::pair<int, int>> user_item;
    std::vector<std::pair<int, int>> user_bundle;
    std::vector<std::pair<int, int>> bundle_item;
    int n_users = 0;
    int n_items = 0;
    int n_bundles = 0;
};

// Parses a two-column tab-separated relation; `#` starts a comment line.
// Malformed rows raise ParseError with file and line; ids past a declared
// vocabulary raise RangeError. Duplicate pairs are dropped, output sorted.
std::vector<std::pair<int, int>> load_pair_file(const std::string& path, int max_first = -1,
                                                int max_second = -1);

InteractionTables load_tables(const std::string& user_item_path, const std::string& user_bundle_path,
                              const std::string& bundle_item_path, int n_users = -1, int n_items = -1,
                              int n_bundles = -1);

void write_pair_file(const std::string& path, const std::vector<std::pair<int, int>>& pairs);
void write_tables(const InteractionTables& tables, const std::string& dir);

}  // namespace bundlenat
