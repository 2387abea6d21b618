#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tamrl/numcore/errors.hpp"

namespace tamrl {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

inline std::size_t shape_product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

/// Dense row-major array of doubles. A default-constructed tensor is empty
/// (rank 0, no elements); every other tensor has strictly positive extents.
class Tensor {
  public:
    Tensor() = default;

    explicit Tensor(Shape shape, double fill = 0.0) : shape_(std::move(shape)) {
        check_extents();
        data_.assign(shape_product(shape_), fill);
    }

    Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
        check_extents();
        if (data_.size() != shape_product(shape_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_str(shape_));
        }
    }

    static Tensor vector(std::initializer_list<double> values) {
        return Tensor({values.size()}, std::vector<double>(values));
    }

    static Tensor vector(std::vector<double> values) {
        const std::size_t n = values.size();
        return Tensor({n}, std::move(values));
    }

    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        std::vector<double> data;
        data.reserve(r * c);
        for (const auto& row : rows) {
            if (row.size() != c) throw ShapeError("ragged matrix literal");
            data.insert(data.end(), row.begin(), row.end());
        }
        return Tensor({r, c}, std::move(data));
    }

    static Tensor identity(std::size_t n) {
        Tensor t({n, n});
        for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
        return t;
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t rows() const {
        require_rank(2);
        return shape_[0];
    }
    std::size_t cols() const {
        require_rank(2);
        return shape_[1];
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * shape_[1], shape_[1]}; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    /// Same elements, new shape of equal element count.
    Tensor reshaped(Shape shape) const {
        Tensor out;
        out.shape_ = std::move(shape);
        out.check_extents();
        if (shape_product(out.shape_) != data_.size()) {
            throw ShapeError("cannot reshape " + shape_str(shape_) + " to " + shape_str(out.shape_));
        }
        out.data_ = data_;
        return out;
    }

    bool operator==(const Tensor& other) const = default;

  private:
    void check_extents() const {
        for (auto d : shape_) {
            if (d == 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape_));
        }
    }

    void require_rank(std::size_t r) const {
        if (shape_.size() != r) {
            throw ShapeError("expected rank-" + std::to_string(r) + " tensor, got " + shape_str(shape_));
        }
    }

    Shape shape_;
    std::vector<double> data_;
};

inline Tensor zeros_like(const Tensor& t) { return t.empty() ? Tensor{} : Tensor(t.shape()); }

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

inline bool all_finite(const Tensor& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](double v) { return std::isfinite(v); });
}

inline void require_finite(const Tensor& t, const std::string& what) {
    if (!all_finite(t)) throw NumericError(what + ": non-finite value");
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

/// a[m x k] * b[k x n]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        double* o = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double s = a(i, p);
            const double* brow = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += s * brow[j];
        }
    }
    return out;
}

/// Inner product of two length-n arrays. Four interleaved partial sums keep
/// the adds independent; the combination order is fixed.
inline double dot_n(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

/// a[m x k] * b[n x k]^T
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) {
        throw ShapeError("matmul_nt: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    Tensor out({m, n});
    double* o = out.data();
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a.data() + i * k;
        for (std::size_t j = 0; j < n; ++j) o[i * n + j] = dot_n(arow, b.data() + j * k, k);
    }
    return out;
}

/// out += a^T * b for a[k x m], b[k x n], out[m x n].
inline void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& out) {
    if (a.rank() != 2 || b.rank() != 2 || a.rows() != b.rows() || out.rank() != 2 || out.rows() != a.cols() ||
        out.cols() != b.cols()) {
        throw ShapeError("matmul_tn: incompatible shapes " + shape_str(a.shape()) + ", " + shape_str(b.shape()) +
                         " into " + shape_str(out.shape()));
    }
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a.data() + p * m;
        const double* brow = b.data() + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double s = arow[i];
            double* o = out.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += s * brow[j];
        }
    }
}

/// a[k x m]^T * b[k x n]
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul_tn: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
    }
    Tensor out({a.cols(), b.cols()});
    matmul_tn_acc(a, b, out);
    return out;
}

/// y += W x for W[m x n], x[n], y[m] given as spans.
inline void gemv_acc(const Tensor& w, std::span<const double> x, std::span<double> y) {
    const std::size_t m = w.rows(), n = w.cols();
    for (std::size_t i = 0; i < m; ++i) y[i] += dot_n(w.data() + i * n, x.data(), n);
}

/// y += W^T x for W[m x n], x[m], y[n].
inline void gemv_t_acc(const Tensor& w, std::span<const double> x, std::span<double> y) {
    const std::size_t m = w.rows(), n = w.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* wr = w.data() + i * n;
        const double s = x[i];
        for (std::size_t j = 0; j < n; ++j) y[j] += s * wr[j];
    }
}

/// W += a b^T for a[m], b[n].
inline void outer_acc(std::span<const double> a, std::span<const double> b, Tensor& w) {
    const std::size_t m = w.rows(), n = w.cols();
    for (std::size_t i = 0; i < m; ++i) {
        double* wr = w.data() + i * n;
        const double s = a[i];
        for (std::size_t j = 0; j < n; ++j) wr[j] += s * b[j];
    }
}

inline Tensor transpose(const Tensor& a) {
    Tensor out({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

enum class ElementwiseOp { add, mul, sub, tanh, sigmoid, relu };

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

inline bool is_binary(ElementwiseOp op) {
    return op == ElementwiseOp::add || op == ElementwiseOp::mul || op == ElementwiseOp::sub;
}

inline Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor* b = nullptr) {
    Tensor out = a;
    auto o = out.values();
    if (is_binary(op)) {
        if (b == nullptr) throw ShapeError("elementwise: binary op needs two operands");
        require_same_shape(a, *b, "elementwise");
        auto bv = b->values();
        switch (op) {
            case ElementwiseOp::add:
                for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
                break;
            case ElementwiseOp::mul:
                for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
                break;
            default:
                for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
                break;
        }
        return out;
    }
    if (b != nullptr) throw ShapeError("elementwise: unary op given two operands");
    switch (op) {
        case ElementwiseOp::tanh:
            for (auto& v : o) v = std::tanh(v);
            break;
        case ElementwiseOp::sigmoid:
            for (auto& v : o) v = sigmoid(v);
            break;
        default:
            for (auto& v : o) v = relu(v);
            break;
    }
    return out;
}

inline Tensor add(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::add, a, &b); }
inline Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::sub, a, &b); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(ElementwiseOp::mul, a, &b); }

/// y += alpha * x
inline void axpy(double alpha, const Tensor& x, Tensor& y) {
    require_same_shape(x, y, "axpy");
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < yv.size(); ++i) yv[i] += alpha * xv[i];
}

inline Tensor scaled(const Tensor& x, double s) {
    Tensor out = x;
    for (auto& v : out.values()) v *= s;
    return out;
}

inline double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(const Tensor& a) { return std::sqrt(dot(a, a)); }

inline double sum(const Tensor& a) {
    double s = 0.0;
    for (double v : a.values()) s += v;
    return s;
}

inline double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.values()) m = std::max(m, std::abs(v));
    return m;
}

/// Column-wise concatenation of two matrices with equal row counts.
inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) {
        throw ShapeError("concat_cols: row mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    const std::size_t r = a.rows(), ca = a.cols(), cb = b.cols();
    Tensor out({r, ca + cb});
    for (std::size_t i = 0; i < r; ++i) {
        std::copy_n(a.data() + i * ca, ca, out.data() + i * (ca + cb));
        std::copy_n(b.data() + i * cb, cb, out.data() + i * (ca + cb) + ca);
    }
    return out;
}

/// Rows [first, first + count) of a matrix.
inline Tensor slice_rows(const Tensor& a, std::size_t first, std::size_t count) {
    if (first + count > a.rows() || count == 0) {
        throw ShapeError("slice_rows: rows [" + std::to_string(first) + ", " + std::to_string(first + count) +
                         ") out of range for " + shape_str(a.shape()));
    }
    const std::size_t c = a.cols();
    std::vector<double> data(a.data() + first * c, a.data() + (first + count) * c);
    return Tensor({count, c}, std::move(data));
}

inline Tensor reverse_rows(const Tensor& a) {
    const std::size_t r = a.rows(), c = a.cols();
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) std::copy_n(a.data() + (r - 1 - i) * c, c, out.data() + i * c);
    return out;
}

}  // namespace tamrl
