#pragma once

#include <vector>

#include "bundlenat/tensor.hpp"

namespace bundlenat {

// Minimum-cost bijection of K slots onto K targets.
struct Assignment {
    std::vector<int> slot_to_item;  // slot s -> item index
    double cost = 0.0;              // exact sum of the selected entries
};

// Shortest-augmenting-path solver; among co-optimal assignments (within a
// small relative tolerance) returns the lexicographically smallest
// slot -> item mapping.
Assignment hungarian_match(const Tensor& cost);

// Order-agnostic K-slot cross-entropy: cost[s][t] = XE(slot s distribution,
// target t); value is the Hungarian minimum, i.e. the min over all K!
// target orderings of the summed cross-entropy.
double oaxe_slot_loss(const Tensor& slot_dists, const std::vector<int>& target_items);

}  // namespace bundlenat
