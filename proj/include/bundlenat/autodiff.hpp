#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bundlenat/rng.hpp"
#include "bundlenat/tensor.hpp"

namespace bundlenat {

// One trainable tensor plus its gradient and Adam moment slots.
struct ParamEntry {
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    bool grad_valid = false;
};

// Named parameter collection. Backed by an ordered map so enumeration is
// deterministic (lexicographic by name), which the checkpoint format relies on.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor init);
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    ParamEntry& entry(const std::string& name);
    const ParamEntry& entry(const std::string& name) const;
    Tensor& value(const std::string& name) { return entry(name).value; }
    const Tensor& value(const std::string& name) const { return entry(name).value; }

    std::vector<std::string> names() const;
    std::size_t count() const { return entries_.size(); }
    std::size_t coord_count() const;

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

    // Adam step counter (bias correction); owned here so the optimizer state
    // travels with the parameters it describes.
    std::int64_t adam_t = 0;

private:
    std::map<std::string, ParamEntry> entries_;
};

class Tape;

struct Node {
    Tensor value;
    Tensor grad;             // allocated on first accumulation
    bool grad_ready = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // pulls node.grad into parents
    ParamEntry* param = nullptr;          // set on parameter leaves
    Tape* tape = nullptr;
};

using Var = std::shared_ptr<Node>;

// Records nodes in evaluation order; single-use. backward() walks the exact
// reverse order, flushes leaf gradients into the ParamStore and clears itself.
class Tape {
public:
    void record(const Var& v);
    Var leaf(ParamStore& ps, const std::string& name);
    void backward(const Var& loss, ParamStore& ps);
    bool consumed() const { return consumed_; }
    std::size_t node_count() const { return order_.size(); }

private:
    std::vector<Var> order_;
    std::map<std::string, Var> leaves_;
    bool consumed_ = false;
};

// Execution context threaded through every op. With tape == nullptr the ops
// compute values only (inference / finite differences); with a tape they
// additionally record backward closures.
struct Ctx {
    Tape* tape = nullptr;
    bool training = false;
    Rng* rng = nullptr;  // dropout masks in training mode
    bool taping() const { return tape != nullptr; }
};

void accumulate_grad(Node& node, const Tensor& g);

// ---- op builders ------------------------------------------------------

Var constant(const Tensor& t);
Var param(Ctx& ctx, ParamStore& ps, const std::string& name);

Var matmul(Ctx& ctx, const Var& a, const Var& b);
Var matmul_nt(Ctx& ctx, const Var& a, const Var& b);
Var add(Ctx& ctx, const Var& a, const Var& b);
Var add_n(Ctx& ctx, const std::vector<Var>& xs);
Var add_row_broadcast(Ctx& ctx, const Var& x, const Var& row);
Var scale(Ctx& ctx, const Var& a, double s);
Var hadamard(Ctx& ctx, const Var& a, const Var& b);
Var relu(Ctx& ctx, const Var& a);
Var sigmoid(Ctx& ctx, const Var& a);
Var softmax_rows(Ctx& ctx, const Var& a);
Var mean_over_rows(Ctx& ctx, const Var& a);
Var sum_all(Ctx& ctx, const Var& a);
Var concat_cols(Ctx& ctx, const std::vector<Var>& parts);
Var gather_rows(Ctx& ctx, const Var& a, std::vector<int> ids);
Var permute_rows(Ctx& ctx, const Var& a, std::vector<int> perm);
Var layer_norm_rows(Ctx& ctx, const Var& a, double eps = 1e-6);

// Inverted dropout on the op output; identity when not training or rate == 0.
Var dropout(Ctx& ctx, const Var& a, double rate);

// Off-diagonal weighted neighbor sum: out[i] = sum_j w_ij * x[j]. Neighbors
// are folded in a label-free canonical order (weight, then row content) so
// the op commutes bit-exactly with vocabulary relabeling.
struct GraphAdjacency {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;
};
Var graph_aggregate(Ctx& ctx, const std::shared_ptr<const GraphAdjacency>& adj, const Var& x);

// Binary cross-entropy over the candidate coordinates of a 1xN probability
// row; log arguments clamped at 1e-12. Candidates are folded in ascending-id
// order, making the value exactly invariant to candidate-list order.
Var bce_over_candidates(Ctx& ctx, const Var& probs, const std::vector<int>& candidate_ids,
                        const std::vector<int>& positive_ids);

}  // namespace bundlenat
