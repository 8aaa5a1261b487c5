#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace bundlenat {

// Dense row-major matrix of 64-bit reals. Row vectors are 1xN, scalars 1x1.
// Values are immutable once an op has produced them; ops return fresh tensors.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::initializer_list<std::initializer_list<double>> rows);

    static Tensor scalar(double v);
    static Tensor row_vector(const std::vector<double>& v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    std::vector<std::size_t> shape() const { return {rows_, cols_}; }
    std::string shape_str() const;

    double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    // Value of a 1x1 tensor.
    double item() const;

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---- kernels --------------------------------------------------------------
// Forward building blocks shared by the taped ops and plain evaluation.

Tensor matmul(const Tensor& a, const Tensor& b);     // a(mxk) * b(kxn)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a(mxk) * b(nxk)^T
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a(kxm)^T * b(kxn)
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor add_row_broadcast(const Tensor& x, const Tensor& row);  // x(nxd) + row(1xd)

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// Per-row softmax with max subtraction; rows sum to 1 within 1e-12.
Tensor softmax_rows(const Tensor& x);

// Column means. Rows are accumulated in lexicographic content order so the
// result is bit-identical under any row permutation.
Tensor mean_over_rows(const Tensor& x);

Tensor concat_cols(const std::vector<const Tensor*>& parts);
Tensor gather_rows(const Tensor& x, const std::vector<int>& ids);

// Indices 0..n-1 ordered so that rows come out lexicographically ascending.
std::vector<int> lex_row_order(const Tensor& x);
// out.row(i) = in.row(perm[i]); perm must be a bijection on rows.
Tensor permute_rows(const Tensor& x, const std::vector<int>& perm);
std::vector<int> invert_permutation(const std::vector<int>& perm);

}  // namespace bundlenat
