#include <doctest.h>

#include <cmath>

#include "bundlenat/autodiff.hpp"
#include "bundlenat/errors.hpp"
#include "bundlenat/grad_check.hpp"

using namespace bundlenat;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = scale * rng.next_normal();
    return t;
}

}  // namespace

TEST_CASE("backward of sum(W) is all ones") {
    ParamStore ps;
    ps.add("w", Tensor(3, 4, 2.5));
    Tape tape;
    Ctx ctx{&tape};
    Var loss = sum_all(ctx, param(ctx, ps, "w"));
    tape.backward(loss, ps);
    const ParamEntry& e = ps.entry("w");
    REQUIRE(e.grad_valid);
    for (double g : e.grad.data()) CHECK(g == 1.0);
}

TEST_CASE("backward of sum(W hadamard W) at [[3]] gives [[6]]") {
    ParamStore ps;
    ps.add("w", Tensor{{3.0}});
    Tape tape;
    Ctx ctx{&tape};
    Var w = param(ctx, ps, "w");
    Var loss = sum_all(ctx, hadamard(ctx, w, w));
    tape.backward(loss, ps);
    CHECK(ps.entry("w").grad.item() == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("tape is single use") {
    ParamStore ps;
    ps.add("w", Tensor(2, 2, 1.0));
    Tape tape;
    Ctx ctx{&tape};
    Var loss = sum_all(ctx, param(ctx, ps, "w"));
    tape.backward(loss, ps);
    CHECK_THROWS_AS(tape.backward(loss, ps), StateError);
}

TEST_CASE("backward without a taped forward is a state error") {
    ParamStore ps;
    ps.add("w", Tensor(1, 1, 1.0));
    Tape tape;
    Var loose = constant(Tensor::scalar(1.0));
    CHECK_THROWS_AS(tape.backward(loose, ps), StateError);
}

TEST_CASE("parameter leaves are cached per tape") {
    ParamStore ps;
    ps.add("w", Tensor(2, 2, 1.0));
    Tape tape;
    Ctx ctx{&tape};
    Var a = param(ctx, ps, "w");
    Var b = param(ctx, ps, "w");
    CHECK(a.get() == b.get());
    Var loss = sum_all(ctx, add(ctx, a, b));
    tape.backward(loss, ps);
    for (double g : ps.entry("w").grad.data()) CHECK(g == 2.0);  // both consumers accumulate
}

TEST_CASE("finite differences agree for every differentiable op on random shapes") {
    Rng rng(2024);
    for (int trial = 0; trial < 8; ++trial) {
        const std::size_t n = 2 + rng.next_below(15);   // up to 16
        const std::size_t d = 2 + rng.next_below(15);
        const std::size_t k = 2 + rng.next_below(7);
        ParamStore ps;
        ps.add("a", random_tensor(n, d, rng));
        ps.add("b", random_tensor(d, k, rng));
        ps.add("bias", random_tensor(1, k, rng));
        ps.add("c", random_tensor(n, k, rng));

        auto adj = std::make_shared<GraphAdjacency>();
        adj->n = static_cast<int>(n);
        adj->rows.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && rng.next_double() < 0.4)
                    adj->rows[i].emplace_back(static_cast<int>(j), rng.next_double());

        std::vector<int> gather_ids;
        for (std::size_t i = 0; i < n; ++i) gather_ids.push_back(static_cast<int>(rng.next_below(n)));

        auto build = [&](Ctx& ctx, ParamStore& p) {
            Var a = param(ctx, p, "a");
            Var b = param(ctx, p, "b");
            Var c = param(ctx, p, "c");
            Var lin = add_row_broadcast(ctx, matmul(ctx, a, b), param(ctx, p, "bias"));
            Var s = softmax_rows(ctx, scale(ctx, matmul_nt(ctx, lin, c), 0.7));
            Var mixed = matmul(ctx, s, relu(ctx, c));
            Var gathered = gather_rows(ctx, graph_aggregate(ctx, adj, mixed), gather_ids);
            Var pooled = mean_over_rows(ctx, concat_cols(ctx, {gathered, sigmoid(ctx, gathered)}));
            Var normed = layer_norm_rows(ctx, pooled);
            return sum_all(ctx, hadamard(ctx, normed, normed));
        };
        const double err = finite_diff_check(ps, build);
        CHECK(err < 1e-5);
    }
}

TEST_CASE("finite differences on a quadratic form are near exact") {
    Rng rng(9);
    ParamStore ps;
    ps.add("w", random_tensor(4, 4, rng));
    auto build = [](Ctx& ctx, ParamStore& p) {
        Var w = param(ctx, p, "w");
        return sum_all(ctx, hadamard(ctx, w, w));
    };
    CHECK(finite_diff_check(ps, build) < 1e-9);
}

TEST_CASE("finite differences on a softmax cross-entropy toy") {
    Rng rng(17);
    ParamStore ps;
    ps.add("w", random_tensor(3, 6, rng));
    std::vector<int> cands = {0, 1, 2, 3, 4, 5};
    std::vector<int> pos = {2};
    auto build = [&](Ctx& ctx, ParamStore& p) {
        Var probs = softmax_rows(ctx, param(ctx, p, "w"));
        Var row = mean_over_rows(ctx, probs);
        return bce_over_candidates(ctx, row, cands, pos);
    };
    CHECK(finite_diff_check(ps, build) < 1e-6);
}

TEST_CASE("finite_diff_check rejects nondeterministic closures") {
    ParamStore ps;
    ps.add("w", Tensor(2, 2, 1.0));
    int calls = 0;
    auto build = [&calls](Ctx& ctx, ParamStore& p) {
        Var w = param(ctx, p, "w");
        Var noisy = scale(ctx, w, 1.0 + 0.01 * static_cast<double>(calls++));
        return sum_all(ctx, noisy);
    };
    CHECK_THROWS_AS(finite_diff_check(ps, build), ContractError);
}

TEST_CASE("finite_diff_check validates epsilon range") {
    ParamStore ps;
    ps.add("w", Tensor(1, 1, 1.0));
    auto build = [](Ctx& ctx, ParamStore& p) { return sum_all(ctx, param(ctx, p, "w")); };
    GradCheckOptions opts;
    opts.eps = 1e-2;
    CHECK_THROWS_AS(finite_diff_check(ps, build, opts), ContractError);
}

TEST_CASE("dropout is identity in inference mode") {
    Tensor x(50, 40, 1.0);
    Ctx infer_ctx;
    Var xv = constant(x);
    Var out = dropout(infer_ctx, xv, 0.3);
    CHECK(out.get() == xv.get());
}

TEST_CASE("dropout training path keeps exact inverse scaling") {
    ParamStore ps;
    ps.add("w", Tensor(40, 25, 2.0));
    Tape tape;
    Rng drop_rng(77);
    Ctx ctx{&tape, true, &drop_rng};
    Var w = param(ctx, ps, "w");
    Var out = dropout(ctx, w, 0.25);
    std::size_t zeros = 0;
    for (double v : out->value.data()) {
        if (v == 0.0)
            ++zeros;
        else
            CHECK(v == doctest::Approx(2.0 / 0.75).epsilon(1e-12));
    }
    CHECK(zeros > 100);
    CHECK(zeros < 500);
    Var loss = sum_all(ctx, out);
    tape.backward(loss, ps);
    std::size_t grad_zeros = 0;
    for (double g : ps.entry("w").grad.data())
        if (g == 0.0) ++grad_zeros;
    CHECK(grad_zeros == zeros);
}

TEST_CASE("bce_over_candidates validates targets") {
    Ctx ctx;
    Tensor probs(1, 10, 0.5);
    Var p = constant(probs);
    CHECK_THROWS_AS(bce_over_candidates(ctx, p, {0, 1, 2}, {5}), DataError);
    CHECK_THROWS_AS(bce_over_candidates(ctx, p, {0, 12}, {0}), RangeError);
}
