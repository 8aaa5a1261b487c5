#include "bundlenat/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "bundlenat/errors.hpp"

namespace bundlenat {

Tensor& ParamStore::add(const std::string& name, Tensor init) {
    auto [it, inserted] = entries_.try_emplace(name);
    if (!inserted) throw StateError("parameter already registered: " + name);
    it->second.value = std::move(init);
    return it->second.value;
}

ParamEntry& ParamStore::entry(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

const ParamEntry& ParamStore::entry(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw StateError("unknown parameter: " + name);
    return it->second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(name);
    return out;
}

std::size_t ParamStore::coord_count() const {
    std::size_t n = 0;
    for (const auto& [name, e] : entries_) n += e.value.size();
    return n;
}

void accumulate_grad(Node& node, const Tensor& g) {
    if (!node.grad_ready) {
        node.grad = Tensor(node.value.rows(), node.value.cols());
        node.grad_ready = true;
    }
    if (!node.grad.same_shape(g))
        throw DimensionError("gradient shape mismatch: " + node.grad.shape_str() + " vs " + g.shape_str());
    for (std::size_t i = 0; i < g.size(); ++i) node.grad.data()[i] += g.data()[i];
}

void Tape::record(const Var& v) {
    v->tape = this;
    order_.push_back(v);
}

Var Tape::leaf(ParamStore& ps, const std::string& name) {
    auto it = leaves_.find(name);
    if (it != leaves_.end()) return it->second;
    auto node = std::make_shared<Node>();
    node->value = ps.value(name);
    node->param = &ps.entry(name);
    record(node);
    leaves_.emplace(name, node);
    return node;
}

void Tape::backward(const Var& loss, ParamStore& ps) {
    if (consumed_) throw StateError("backward: tape already consumed; rerun the forward pass");
    if (order_.empty()) throw StateError("backward: no taped forward pass");
    if (!loss || loss->tape != this) throw StateError("backward: loss was not produced on this tape");
    if (loss->value.size() != 1) throw DimensionError("backward: loss must be scalar, got " + loss->value.shape_str());

    loss->grad = Tensor::scalar(1.0);
    loss->grad_ready = true;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node& n = **it;
        if (n.grad_ready && n.backprop) n.backprop(n);
    }
    for (auto& [name, node] : leaves_) {
        ParamEntry& e = ps.entry(name);
        if (node->grad_ready) {
            e.grad = std::move(node->grad);
        } else {
            e.grad = Tensor(e.value.rows(), e.value.cols());
        }
        e.grad_valid = true;
    }
    order_.clear();
    leaves_.clear();
    consumed_ = true;
}

namespace {

Var make_node(Ctx& ctx, Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto node = std::make_shared<Node>();
    node->value = std::move(value);
    if (ctx.taping()) {
        node->parents = std::move(parents);
        node->backprop = std::move(backprop);
        ctx.tape->record(node);
    }
    return node;
}

}  // namespace

Var constant(const Tensor& t) {
    auto node = std::make_shared<Node>();
    node->value = t;
    return node;
}

Var param(Ctx& ctx, ParamStore& ps, const std::string& name) {
    if (ctx.taping()) return ctx.tape->leaf(ps, name);
    return constant(ps.value(name));
}

Var matmul(Ctx& ctx, const Var& a, const Var& b) {
    return make_node(ctx, matmul(a->value, b->value), {a, b}, [](Node& n) {
        accumulate_grad(*n.parents[0], matmul_nt(n.grad, n.parents[1]->value));
        accumulate_grad(*n.parents[1], matmul_tn(n.parents[0]->value, n.grad));
    });
}

Var matmul_nt(Ctx& ctx, const Var& a, const Var& b) {
    return make_node(ctx, matmul_nt(a->value, b->value), {a, b}, [](Node& n) {
        accumulate_grad(*n.parents[0], matmul(n.grad, n.parents[1]->value));
        accumulate_grad(*n.parents[1], matmul_tn(n.grad, n.parents[0]->value));
    });
}

Var add(Ctx& ctx, const Var& a, const Var& b) {
    return make_node(ctx, add(a->value, b->value), {a, b}, [](Node& n) {
        accumulate_grad(*n.parents[0], n.grad);
        accumulate_grad(*n.parents[1], n.grad);
    });
}

Var add_n(Ctx& ctx, const std::vector<Var>& xs) {
    if (xs.empty()) throw ArgumentError("add_n: no inputs");
    Tensor sum = xs[0]->value;
    for (std::size_t i = 1; i < xs.size(); ++i) sum = add(sum, xs[i]->value);
    return make_node(ctx, std::move(sum), xs, [](Node& n) {
        for (auto& p : n.parents) accumulate_grad(*p, n.grad);
    });
}

Var add_row_broadcast(Ctx& ctx, const Var& x, const Var& row) {
    return make_node(ctx, add_row_broadcast(x->value, row->value), {x, row}, [](Node& n) {
        accumulate_grad(*n.parents[0], n.grad);
        Tensor rg(1, n.grad.cols());
        for (std::size_t i = 0; i < n.grad.rows(); ++i) {
            const double* gi = n.grad.row(i);
            for (std::size_t j = 0; j < n.grad.cols(); ++j) rg.at(0, j) += gi[j];
        }
        accumulate_grad(*n.parents[1], rg);
    });
}

Var scale(Ctx& ctx, const Var& a, double s) {
    return make_node(ctx, scale(a->value, s), {a}, [s](Node& n) {
        accumulate_grad(*n.parents[0], scale(n.grad, s));
    });
}

Var hadamard(Ctx& ctx, const Var& a, const Var& b) {
    return make_node(ctx, hadamard(a->value, b->value), {a, b}, [](Node& n) {
        accumulate_grad(*n.parents[0], hadamard(n.grad, n.parents[1]->value));
        accumulate_grad(*n.parents[1], hadamard(n.grad, n.parents[0]->value));
    });
}

Var relu(Ctx& ctx, const Var& a) {
    return make_node(ctx, relu(a->value), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        Tensor g = n.grad;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (x.data()[i] <= 0.0) g.data()[i] = 0.0;
        accumulate_grad(*n.parents[0], g);
    });
}

Var sigmoid(Ctx& ctx, const Var& a) {
    return make_node(ctx, sigmoid(a->value), {a}, [](Node& n) {
        Tensor g = n.grad;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = n.value.data()[i];
            g.data()[i] *= s * (1.0 - s);
        }
        accumulate_grad(*n.parents[0], g);
    });
}

Var softmax_rows(Ctx& ctx, const Var& a) {
    return make_node(ctx, softmax_rows(a->value), {a}, [](Node& n) {
        Tensor g(n.value.rows(), n.value.cols());
        for (std::size_t i = 0; i < n.value.rows(); ++i) {
            const double* s = n.value.row(i);
            const double* ds = n.grad.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < n.value.cols(); ++j) dot += ds[j] * s[j];
            double* gi = g.row(i);
            for (std::size_t j = 0; j < n.value.cols(); ++j) gi[j] = s[j] * (ds[j] - dot);
        }
        accumulate_grad(*n.parents[0], g);
    });
}

Var mean_over_rows(Ctx& ctx, const Var& a) {
    return make_node(ctx, mean_over_rows(a->value), {a}, [](Node& n) {
        const Tensor& x = n.parents[0]->value;
        const double inv = 1.0 / static_cast<double>(x.rows());
        Tensor g(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double* gi = g.row(i);
            const double* d = n.grad.row(0);
            for (std::size_t j = 0; j < x.cols(); ++j) gi[j] = d[j] * inv;
        }
        accumulate_grad(*n.parents[0], g);
    });
}

Var sum_all(Ctx& ctx, const Var& a) {
    double s = 0.0;
    for (double v : a->value.data()) s += v;
    return make_node(ctx, Tensor::scalar(s), {a}, [](Node& n) {
        const double d = n.grad.item();
        Tensor g(n.parents[0]->value.rows(), n.parents[0]->value.cols(), d);
        accumulate_grad(*n.parents[0], g);
    });
}

Var concat_cols(Ctx& ctx, const std::vector<Var>& parts) {
    if (parts.empty()) throw ArgumentError("concat_cols: no parts");
    std::vector<const Tensor*> vals;
    vals.reserve(parts.size());
    for (const Var& p : parts) vals.push_back(&p->value);
    return make_node(ctx, concat_cols(vals), parts, [](Node& n) {
        std::size_t off = 0;
        for (auto& p : n.parents) {
            Tensor g(p->value.rows(), p->value.cols());
            for (std::size_t i = 0; i < g.rows(); ++i) {
                const double* src = n.grad.row(i) + off;
                std::copy(src, src + g.cols(), g.row(i));
            }
            accumulate_grad(*p, g);
            off += p->value.cols();
        }
    });
}

Var gather_rows(Ctx& ctx, const Var& a, std::vector<int> ids) {
    Tensor value = gather_rows(a->value, ids);
    return make_node(ctx, std::move(value), {a}, [ids = std::move(ids)](Node& n) {
        Tensor g(n.parents[0]->value.rows(), n.parents[0]->value.cols());
        for (std::size_t i = 0; i < ids.size(); ++i) {
            double* dst = g.row(static_cast<std::size_t>(ids[i]));
            const double* src = n.grad.row(i);
            for (std::size_t j = 0; j < g.cols(); ++j) dst[j] += src[j];
        }
        accumulate_grad(*n.parents[0], g);
    });
}

Var permute_rows(Ctx& ctx, const Var& a, std::vector<int> perm) {
    Tensor value = permute_rows(a->value, perm);
    return make_node(ctx, std::move(value), {a}, [perm = std::move(perm)](Node& n) {
        Tensor g(n.parents[0]->value.rows(), n.parents[0]->value.cols());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            const double* src = n.grad.row(i);
            std::copy(src, src + g.cols(), g.row(static_cast<std::size_t>(perm[i])));
        }
        accumulate_grad(*n.parents[0], g);
    });
}

Var layer_norm_rows(Ctx& ctx, const Var& a, double eps) {
    const Tensor& x = a->value;
    Tensor out(x.rows(), x.cols());
    Tensor inv_std(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        double mu = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) mu += xi[j];
        mu /= static_cast<double>(x.cols());
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) var += (xi[j] - mu) * (xi[j] - mu);
        var /= static_cast<double>(x.cols());
        const double istd = 1.0 / std::sqrt(var + eps);
        inv_std.at(i, 0) = istd;
        double* oi = out.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) oi[j] = (xi[j] - mu) * istd;
    }
    return make_node(ctx, std::move(out), {a}, [inv_std = std::move(inv_std)](Node& n) {
        const std::size_t d = n.value.cols();
        Tensor g(n.value.rows(), d);
        for (std::size_t i = 0; i < n.value.rows(); ++i) {
            const double* y = n.value.row(i);
            const double* dy = n.grad.row(i);
            double mean_dy = 0.0, mean_dyy = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                mean_dy += dy[j];
                mean_dyy += dy[j] * y[j];
            }
            mean_dy /= static_cast<double>(d);
            mean_dyy /= static_cast<double>(d);
            double* gi = g.row(i);
            const double istd = inv_std.at(i, 0);
            for (std::size_t j = 0; j < d; ++j) gi[j] = istd * (dy[j] - mean_dy - y[j] * mean_dyy);
        }
        accumulate_grad(*n.parents[0], g);
    });
}

Var dropout(Ctx& ctx, const Var& a, double rate) {
    if (rate < 0.0 || rate >= 1.0) throw ConfigError("dropout rate must be in [0,1)");
    if (!ctx.training || rate == 0.0) return a;
    if (!ctx.rng) throw ConfigError("dropout in training mode requires an RNG");
    const double keep = 1.0 - rate;
    Tensor mask(a->value.rows(), a->value.cols());
    for (double& v : mask.data()) v = (ctx.rng->next_double() >= rate) ? 1.0 / keep : 0.0;
    Tensor out = hadamard(a->value, mask);
    return make_node(ctx, std::move(out), {a}, [mask = std::move(mask)](Node& n) {
        accumulate_grad(*n.parents[0], hadamard(n.grad, mask));
    });
}

Var graph_aggregate(Ctx& ctx, const std::shared_ptr<const GraphAdjacency>& adj, const Var& x) {
    const Tensor& c = x->value;
    if (static_cast<int>(c.rows()) != adj->n)
        throw DimensionError("graph_aggregate: feature rows " + c.shape_str() + " do not match graph size " +
                             std::to_string(adj->n));
    Tensor out(c.rows(), c.cols());
    std::vector<std::pair<int, double>> nbrs;
    for (int i = 0; i < adj->n; ++i) {
        nbrs = adj->rows[static_cast<std::size_t>(i)];
        // Canonical fold order: by weight, then by neighbor row content, so
        // relabeling the vocabulary permutes output rows bit-exactly.
        std::stable_sort(nbrs.begin(), nbrs.end(), [&](const auto& a_, const auto& b_) {
            if (a_.second != b_.second) return a_.second < b_.second;
            const double* ra = c.row(static_cast<std::size_t>(a_.first));
            const double* rb = c.row(static_cast<std::size_t>(b_.first));
            return std::lexicographical_compare(ra, ra + c.cols(), rb, rb + c.cols());
        });
        double* oi = out.row(static_cast<std::size_t>(i));
        for (const auto& [j, w] : nbrs) {
            const double* cj = c.row(static_cast<std::size_t>(j));
            for (std::size_t m = 0; m < c.cols(); ++m) oi[m] += w * cj[m];
        }
    }
    return make_node(ctx, std::move(out), {x}, [adj](Node& n) {
        Tensor g(n.parents[0]->value.rows(), n.parents[0]->value.cols());
        for (int i = 0; i < adj->n; ++i) {
            const double* gi = n.grad.row(static_cast<std::size_t>(i));
            for (const auto& [j, w] : adj->rows[static_cast<std::size_t>(i)]) {
                double* gj = g.row(static_cast<std::size_t>(j));
                for (std::size_t m = 0; m < g.cols(); ++m) gj[m] += w * gi[m];
            }
        }
        accumulate_grad(*n.parents[0], g);
    });
}

Var bce_over_candidates(Ctx& ctx, const Var& probs, const std::vector<int>& candidate_ids,
                        const std::vector<int>& positive_ids) {
    static constexpr double kClamp = 1e-12;
    const Tensor& p = probs->value;
    if (p.rows() != 1) throw DimensionError("bce_over_candidates: expected 1xN probabilities, got " + p.shape_str());
    if (candidate_ids.empty()) throw ArgumentError("bce_over_candidates: no candidates");

    std::vector<int> cands = candidate_ids;
    std::sort(cands.begin(), cands.end());
    std::vector<int> pos = positive_ids;
    std::sort(pos.begin(), pos.end());
    for (int t : pos) {
        if (!std::binary_search(cands.begin(), cands.end(), t))
            throw DataError("bce_over_candidates: target item " + std::to_string(t) + " not among candidates");
    }

    const int n = static_cast<int>(p.cols());
    double loss = 0.0;
    for (int id : cands) {
        if (id < 0 || id >= n) throw RangeError("bce_over_candidates: candidate id " + std::to_string(id) + " out of range");
        const double pi = p.at(0, static_cast<std::size_t>(id));
        const bool y = std::binary_search(pos.begin(), pos.end(), id);
        if (y)
            loss -= std::log(std::max(pi, kClamp));
        else
            loss -= std::log(std::max(1.0 - pi, kClamp));
    }
    return make_node(ctx, Tensor::scalar(loss), {probs},
                     [cands = std::move(cands), pos = std::move(pos)](Node& n) {
                         const Tensor& pv = n.parents[0]->value;
                         const double gout = n.grad.item();
                         Tensor g(1, pv.cols());
                         for (int id : cands) {
                             const double pi = pv.at(0, static_cast<std::size_t>(id));
                             const bool y = std::binary_search(pos.begin(), pos.end(), id);
                             double d = 0.0;
                             if (y) {
                                 if (pi > kClamp) d -= 1.0 / pi;
                             } else {
                                 if (1.0 - pi > kClamp) d += 1.0 / (1.0 - pi);
                             }
                             g.at(0, static_cast<std::size_t>(id)) = gout * d;
                         }
                         accumulate_grad(*n.parents[0], g);
                     });
}

}  // namespace bundlenat
