#include "bundlenat/hungarian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bundlenat/errors.hpp"

namespace bundlenat {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Jonker-Volgenant style shortest augmenting path on a flat n x n matrix.
double jv_solve(const std::vector<double>& c, int n, std::vector<int>& rowsol) {
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = c[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    rowsol.assign(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<std::size_t>(j)]) rowsol[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += c[static_cast<std::size_t>(i) * n + rowsol[static_cast<std::size_t>(i)]];
    return total;
}

}  // namespace

Assignment hungarian_match(const Tensor& cost) {
    if (cost.rows() != cost.cols())
        throw ArgumentError("hungarian_match: cost matrix must be square, got " + cost.shape_str());
    if (!cost.all_finite()) throw ArgumentError("hungarian_match: cost matrix must be finite");
    const int n = static_cast<int>(cost.rows());

    std::vector<int> rowsol;
    const double best = jv_solve(cost.data(), n, rowsol);
    const double tol = 1e-9 * (1.0 + std::fabs(best));

    // Lexicographic refinement: fix each slot to the smallest item that still
    // admits an optimal completion.
    Assignment out;
    out.slot_to_item.assign(static_cast<std::size_t>(n), -1);
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    double prefix = 0.0;
    for (int s = 0; s < n; ++s) {
        const int r = n - s - 1;  // remaining slots after fixing this one
        std::vector<int> free_items;
        for (int j = 0; j < n; ++j)
            if (!used[static_cast<std::size_t>(j)]) free_items.push_back(j);

        int chosen = -1;
        double chosen_total = kInf;
        for (int j : free_items) {
            double sub = 0.0;
            if (r > 0) {
                std::vector<int> rest;
                for (int it : free_items)
                    if (it != j) rest.push_back(it);
                std::vector<double> subc(static_cast<std::size_t>(r) * r);
                for (int a = 0; a < r; ++a)
                    for (int b = 0; b < r; ++b)
                        subc[static_cast<std::size_t>(a) * r + b] =
                            cost.at(static_cast<std::size_t>(s + 1 + a), static_cast<std::size_t>(rest[static_cast<std::size_t>(b)]));
                std::vector<int> dummy;
                sub = jv_solve(subc, r, dummy);
            }
            const double total = prefix + cost.at(static_cast<std::size_t>(s), static_cast<std::size_t>(j)) + sub;
            if (total <= best + tol) {
                chosen = j;
                break;
            }
            if (total < chosen_total) {
                chosen_total = total;
                chosen = j;
            }
        }
        out.slot_to_item[static_cast<std::size_t>(s)] = chosen;
        used[static_cast<std::size_t>(chosen)] = 1;
        prefix += cost.at(static_cast<std::size_t>(s), static_cast<std::size_t>(chosen));
    }
    out.cost = 0.0;
    for (int s = 0; s < n; ++s)
        out.cost += cost.at(static_cast<std::size_t>(s), static_cast<std::size_t>(out.slot_to_item[static_cast<std::size_t>(s)]));
    return out;
}

double oaxe_slot_loss(const Tensor& slot_dists, const std::vector<int>& target_items) {
    static constexpr double kClamp = 1e-12;
    const std::size_t k = slot_dists.rows();
    if (target_items.size() != k)
        throw ArgumentError("oaxe_slot_loss: " + std::to_string(k) + " slots vs " +
                            std::to_string(target_items.size()) + " targets");
    Tensor cost(k, k);
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t t = 0; t < k; ++t) {
            const int item = target_items[t];
            if (item < 0 || static_cast<std::size_t>(item) >= slot_dists.cols())
                throw RangeError("oaxe_slot_loss: target item " + std::to_string(item) + " out of range");
            cost.at(s, t) = -std::log(std::max(slot_dists.at(s, static_cast<std::size_t>(item)), kClamp));
        }
    }
    return hungarian_match(cost).cost;
}

}  // namespace bundlenat
