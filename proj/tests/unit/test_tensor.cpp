#include <doctest.h>

#include <cmath>

#include "bundlenat/errors.hpp"
#include "bundlenat/rng.hpp"
#include "bundlenat/tensor.hpp"

using namespace bundlenat;

namespace {

Tensor random_tensor(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
    Tensor t(rows, cols);
    for (double& v : t.data()) v = scale * rng.next_normal();
    return t;
}

}  // namespace

TEST_CASE("matmul identity and hand cases") {
    Tensor eye{{1, 0}, {0, 1}};
    Tensor b{{2, 3}, {4, 5}};
    Tensor c = matmul(eye, b);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(c.at(i, j) == b.at(i, j));

    Tensor row{{1, 2}};
    Tensor col{{3}, {4}};
    CHECK(matmul(row, col).item() == doctest::Approx(11.0).epsilon(1e-15));
}

TEST_CASE("matmul matches a triple-loop oracle") {
    Rng rng(101);
    Tensor a = random_tensor(5, 7, rng);
    Tensor b = random_tensor(7, 3, rng);
    Tensor c = matmul(a, b);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < 7; ++p) acc += a.at(i, p) * b.at(p, j);
            CHECK(std::fabs(c.at(i, j) - acc) < 1e-12);
        }
    }
}

TEST_CASE("matmul shape mismatch names both shapes") {
    Tensor a(2, 3), b(4, 2);
    try {
        matmul(a, b);
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("[2x3]") != std::string::npos);
        CHECK(msg.find("[4x2]") != std::string::npos);
    }
}

TEST_CASE("matmul_nt and matmul_tn agree with explicit transposes") {
    Rng rng(7);
    Tensor a = random_tensor(4, 6, rng);
    Tensor b = random_tensor(5, 6, rng);
    Tensor via_t = matmul(a, transpose(b));
    Tensor nt = matmul_nt(a, b);
    for (std::size_t i = 0; i < nt.size(); ++i) CHECK(nt.data()[i] == via_t.data()[i]);

    Tensor c = random_tensor(6, 4, rng);
    Tensor d = random_tensor(6, 3, rng);
    Tensor tn = matmul_tn(c, d);
    Tensor via_t2 = matmul(transpose(c), d);
    for (std::size_t i = 0; i < tn.size(); ++i) CHECK(std::fabs(tn.data()[i] - via_t2.data()[i]) < 1e-12);
}

TEST_CASE("softmax_rows hand values") {
    Tensor t{{0, 0}};
    Tensor s = softmax_rows(t);
    CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-14));

    Tensor big{{1000, 1000, 1000}};
    Tensor sb = softmax_rows(big);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::isfinite(sb.at(0, j)));
        CHECK(sb.at(0, j) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }

    Tensor ln3{{0.0, std::log(3.0)}};
    Tensor sl = softmax_rows(ln3);
    CHECK(sl.at(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(sl.at(0, 1) == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("softmax_rows rows sum to one for equal and spread-1e3 inputs") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.next_below(12);
        Tensor x(3, n);
        for (double& v : x.data()) v = 1e3 * (rng.next_double() - 0.5);
        for (std::size_t j = 0; j < n; ++j) x.at(1, j) = 7.0;  // an all-equal row
        Tensor s = softmax_rows(x);
        for (std::size_t i = 0; i < 3; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(s.at(i, j) >= 0.0);
                sum += s.at(i, j);
            }
            CHECK(std::fabs(sum - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("softmax_rows rejects non-finite input") {
    Tensor x(1, 2);
    x.at(0, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(softmax_rows(x), NumericError);
}

TEST_CASE("mean_over_rows hand cases") {
    Tensor x{{1, 3}, {3, 5}};
    Tensor m = mean_over_rows(x);
    CHECK(m.at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.at(0, 1) == doctest::Approx(4.0).epsilon(1e-15));

    Tensor single{{7, 8, 9}};
    Tensor ms = mean_over_rows(single);
    for (std::size_t j = 0; j < 3; ++j) CHECK(ms.at(0, j) == single.at(0, j));
}

TEST_CASE("mean_over_rows is exactly permutation invariant") {
    Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.next_below(15);
        const std::size_t d = 1 + rng.next_below(9);
        Tensor x = random_tensor(n, d, rng);
        Tensor base = mean_over_rows(x);
        std::vector<int> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<int>(i);
        rng.shuffle(perm);
        Tensor shuffled = permute_rows(x, perm);
        Tensor other = mean_over_rows(shuffled);
        for (std::size_t j = 0; j < d; ++j) CHECK(base.at(0, j) == other.at(0, j));  // bit-exact
    }
}

TEST_CASE("mean_over_rows rejects empty input") {
    Tensor empty;
    CHECK_THROWS_AS(mean_over_rows(empty), ArgumentError);
}

TEST_CASE("concat_cols and gather_rows") {
    Tensor a{{1, 2}, {3, 4}};
    Tensor b{{5}, {6}};
    Tensor c = concat_cols({&a, &b});
    CHECK(c.rows() == 2);
    CHECK(c.cols() == 3);
    CHECK(c.at(0, 2) == 5.0);
    CHECK(c.at(1, 1) == 4.0);

    Tensor g = gather_rows(a, {1, 0, 1});
    CHECK(g.rows() == 3);
    CHECK(g.at(0, 0) == 3.0);
    CHECK(g.at(2, 1) == 4.0);
    CHECK_THROWS_AS(gather_rows(a, {2}), RangeError);
}

TEST_CASE("lex_row_order sorts rows lexicographically") {
    Tensor x{{2, 0}, {1, 9}, {1, 3}};
    const std::vector<int> order = lex_row_order(x);
    CHECK(order == std::vector<int>{2, 1, 0});
    const std::vector<int> inv = invert_permutation(order);
    Tensor sorted = permute_rows(x, order);
    Tensor back = permute_rows(sorted, inv);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.data()[i] == x.data()[i]);
}

TEST_CASE("invert_permutation rejects non-permutations") {
    CHECK_THROWS_AS(invert_permutation({0, 0}), ArgumentError);
    CHECK_THROWS_AS(invert_permutation({1, 2}), ArgumentError);
}
