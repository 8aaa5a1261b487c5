#include "bundlenat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bundlenat/errors.hpp"

namespace bundlenat {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw DimensionError("tensor extents must be positive");
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    if (rows_ == 0) throw DimensionError("tensor extents must be positive");
    cols_ = rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw DimensionError("ragged initializer rows");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t.data_[0] = v;
    return t;
}

Tensor Tensor::row_vector(const std::vector<double>& v) {
    Tensor t(1, v.size());
    t.data_ = v;
    return t;
}

std::string Tensor::shape_str() const {
    return "[" + std::to_string(rows_) + "x" + std::to_string(cols_) + "]";
}

double Tensor::item() const {
    if (size() != 1) throw DimensionError("item() requires a 1x1 tensor, got " + shape_str());
    return data_[0];
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows())
        throw DimensionError("matmul: inner extents differ: " + a.shape_str() + " x " + b.shape_str());
    Tensor c(a.rows(), b.cols());
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            if (av == 0.0) continue;
            const double* bp = b.row(p);
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols())
        throw DimensionError("matmul_nt: column extents differ: " + a.shape_str() + " x " + b.shape_str() + "^T");
    // One small transpose turns the dot-product form into the cache- and
    // vector-friendly ikj kernel; accumulation order per output cell is
    // unchanged (ascending p), so results are bit-identical.
    return matmul(a, transpose(b));
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows())
        throw DimensionError("matmul_tn: row extents differ: " + a.shape_str() + "^T x " + b.shape_str());
    Tensor c(a.cols(), b.cols());
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    for (std::size_t p = 0; p < k; ++p) {
        const double* ap = a.row(p);
        const double* bp = b.row(p);
        for (std::size_t i = 0; i < m; ++i) {
            const double av = ap[i];
            if (av == 0.0) continue;
            double* ci = c.row(i);
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    Tensor t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t.at(j, i) = a.at(i, j);
    return t;
}

static void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shapes differ: " + a.shape_str() + " vs " + b.shape_str());
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Tensor scale(const Tensor& a, double s) {
    Tensor c = a;
    for (double& v : c.data()) v *= s;
    return c;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "hadamard");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= b.data()[i];
    return c;
}

Tensor add_row_broadcast(const Tensor& x, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != x.cols())
        throw DimensionError("add_row_broadcast: " + x.shape_str() + " + " + row.shape_str());
    Tensor c = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double* ci = c.row(i);
        const double* r = row.row(0);
        for (std::size_t j = 0; j < x.cols(); ++j) ci[j] += r[j];
    }
    return c;
}

Tensor relu(const Tensor& a) {
    Tensor c = a;
    for (double& v : c.data())
        if (v < 0.0) v = 0.0;
    return c;
}

Tensor sigmoid(const Tensor& a) {
    Tensor c = a;
    for (double& v : c.data()) {
        if (v >= 0.0) {
            v = 1.0 / (1.0 + std::exp(-v));
        } else {
            const double e = std::exp(v);
            v = e / (1.0 + e);
        }
    }
    return c;
}

Tensor softmax_rows(const Tensor& x) {
    if (!x.all_finite()) throw NumericError("softmax_rows: non-finite input");
    Tensor out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        double mx = xi[0];
        for (std::size_t j = 1; j < x.cols(); ++j) mx = std::max(mx, xi[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            oi[j] = std::exp(xi[j] - mx);
            denom += oi[j];
        }
        for (std::size_t j = 0; j < x.cols(); ++j) oi[j] /= denom;
    }
    return out;
}

Tensor mean_over_rows(const Tensor& x) {
    if (x.rows() == 0) throw ArgumentError("mean_over_rows: empty input");
    const std::vector<int> order = lex_row_order(x);
    Tensor out(1, x.cols());
    double* o = out.row(0);
    for (int idx : order) {
        const double* r = x.row(static_cast<std::size_t>(idx));
        for (std::size_t j = 0; j < x.cols(); ++j) o[j] += r[j];
    }
    const double inv = 1.0 / static_cast<double>(x.rows());
    for (std::size_t j = 0; j < x.cols(); ++j) o[j] *= inv;
    return out;
}

Tensor concat_cols(const std::vector<const Tensor*>& parts) {
    if (parts.empty()) throw ArgumentError("concat_cols: no parts");
    const std::size_t n = parts[0]->rows();
    std::size_t total = 0;
    for (const Tensor* p : parts) {
        if (p->rows() != n)
            throw DimensionError("concat_cols: row extents differ: " + parts[0]->shape_str() + " vs " + p->shape_str());
        total += p->cols();
    }
    Tensor out(n, total);
    for (std::size_t i = 0; i < n; ++i) {
        double* oi = out.row(i);
        std::size_t off = 0;
        for (const Tensor* p : parts) {
            const double* pi = p->row(i);
            std::copy(pi, pi + p->cols(), oi + off);
            off += p->cols();
        }
    }
    return out;
}

Tensor gather_rows(const Tensor& x, const std::vector<int>& ids) {
    if (ids.empty()) throw ArgumentError("gather_rows: empty id list");
    Tensor out(ids.size(), x.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= x.rows())
            throw RangeError("gather_rows: id " + std::to_string(ids[i]) + " out of range for " + x.shape_str());
        const double* src = x.row(static_cast<std::size_t>(ids[i]));
        std::copy(src, src + x.cols(), out.row(i));
    }
    return out;
}

std::vector<int> lex_row_order(const Tensor& x) {
    std::vector<int> order(x.rows());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double* ra = x.row(static_cast<std::size_t>(a));
        const double* rb = x.row(static_cast<std::size_t>(b));
        return std::lexicographical_compare(ra, ra + x.cols(), rb, rb + x.cols());
    });
    return order;
}

Tensor permute_rows(const Tensor& x, const std::vector<int>& perm) {
    if (perm.size() != x.rows()) throw DimensionError("permute_rows: permutation size mismatch");
    return gather_rows(x, perm);
}

std::vector<int> invert_permutation(const std::vector<int>& perm) {
    std::vector<int> inv(perm.size(), -1);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const int p = perm[i];
        if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || inv[static_cast<std::size_t>(p)] != -1)
            throw ArgumentError("invert_permutation: input is not a permutation");
        inv[static_cast<std::size_t>(p)] = static_cast<int>(i);
    }
    return inv;
}

}  // namespace bundlenat
