#include "bundlenat/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

constexpr const char* kTag = "#bundlenat-ckpt v1";

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors,
                     const CheckpointMeta& meta) {
    std::vector<std::pair<std::string, const Tensor*>> sorted = tensors;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].first == sorted[i - 1].first)
            throw FormatError("duplicate tensor name in checkpoint: " + sorted[i].first);

    nlohmann::ordered_json manifest;
    manifest["stage"] = meta.stage;
    manifest["seed"] = meta.seed;
    manifest["config"] = meta.config;
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : sorted) {
        nlohmann::ordered_json row;
        row["name"] = name;
        row["shape"] = {t->rows(), t->cols()};
        row["dtype"] = "f64";
        row["offset"] = offset;
        table.push_back(std::move(row));
        offset += static_cast<std::uint64_t>(t->size()) * 8;
    }
    manifest["tensors"] = std::move(table);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << kTag << '\n' << manifest.dump() << '\n';
    for (const auto& [name, t] : sorted) {
        out.write(reinterpret_cast<const char*>(t->data().data()),
                  static_cast<std::streamsize>(t->size() * sizeof(double)));
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_checkpoint(const std::string& path, const ParamStore& params, const CheckpointMeta& meta) {
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    for (const auto& [name, entry] : params) tensors.emplace_back(name, &entry.value);
    save_checkpoint(path, tensors, meta);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string tag, manifest_line;
    if (!std::getline(in, tag) || tag != kTag)
        throw FormatError(path + ": version tag mismatch, expected \"" + std::string(kTag) + "\"");
    if (!std::getline(in, manifest_line)) throw FormatError(path + ": missing manifest");

    nlohmann::ordered_json manifest;
    try {
        manifest = nlohmann::ordered_json::parse(manifest_line);
    } catch (const std::exception& e) {
        throw FormatError(path + ": bad manifest: " + e.what());
    }

    LoadedCheckpoint ck;
    ck.meta.stage = manifest.value("stage", "");
    ck.meta.seed = manifest.value("seed", std::uint64_t{0});
    ck.meta.config = manifest.value("config", nlohmann::ordered_json::object());

    std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::uint64_t expected = 0;
    std::string prev_name;
    for (const auto& row : manifest.at("tensors")) {
        const std::string name = row.at("name").get<std::string>();
        if (!prev_name.empty() && !(prev_name < name))
            throw FormatError(path + ": manifest names not sorted/unique at \"" + name + "\"");
        prev_name = name;
        if (row.at("dtype").get<std::string>() != "f64")
            throw FormatError(path + ": unsupported dtype for " + name);
        const auto shape = row.at("shape");
        const std::size_t rows = shape.at(0).get<std::size_t>();
        const std::size_t cols = shape.at(1).get<std::size_t>();
        const std::uint64_t offset = row.at("offset").get<std::uint64_t>();
        if (offset != expected) throw FormatError(path + ": non-contiguous payload offset for " + name);
        const std::uint64_t bytes = static_cast<std::uint64_t>(rows) * cols * 8;
        if (offset + bytes > payload.size()) throw FormatError(path + ": payload too short for " + name);
        Tensor t(rows, cols);
        std::memcpy(t.data().data(), payload.data() + offset, bytes);
        ck.tensors.emplace(name, std::move(t));
        expected = offset + bytes;
    }
    if (expected != payload.size())
        throw FormatError(path + ": payload length " + std::to_string(payload.size()) +
                          " does not match manifest total " + std::to_string(expected));
    return ck;
}

}  // namespace bundlenat
