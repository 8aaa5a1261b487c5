#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bundlenat/autodiff.hpp"
#include "bundlenat/tensor.hpp"

namespace bundlenat {

// Shared checkpoint container used by every stage:
//   line 1: "#bundlenat-ckpt v1"
//   line 2: one-line JSON manifest (stage, seed, config echo, tensor table)
//   rest:   concatenated row-major little-endian f64 payload
// Manifest names are unique and lexicographically sorted; offsets are byte
// positions into the payload and must tile it exactly.
struct CheckpointMeta {
    std::string stage;
    std::uint64_t seed = 0;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors,
                     const CheckpointMeta& meta);
void save_checkpoint(const std::string& path, const ParamStore& params, const CheckpointMeta& meta);

struct LoadedCheckpoint {
    std::map<std::string, Tensor> tensors;
    CheckpointMeta meta;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace bundlenat
