#ifndef SPECNN_MATRIX_HPP
#define SPECNN_MATRIX_HPP

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "specnn/errors.hpp"

namespace specnn {

// Dense row-major matrix, double precision throughout.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw shape_error("Matrix: data length " + std::to_string(data_.size()) +
                              " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

using Vector = std::vector<double>;

namespace detail {
inline void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, std::size_t m, std::size_t n,
                 std::size_t k, const Matrix& a, const Matrix& b, Matrix& c) {
    cblas_dgemm(CblasRowMajor, ta, tb, static_cast<int>(m), static_cast<int>(n),
                static_cast<int>(k), 1.0, a.data(), static_cast<int>(a.cols()), b.data(),
                static_cast<int>(b.cols()), 0.0, c.data(), static_cast<int>(c.cols()));
}
}  // namespace detail

// c = a.b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw shape_error("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " . " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    Matrix c(a.rows(), b.cols());
    detail::gemm(CblasNoTrans, CblasNoTrans, a.rows(), b.cols(), a.cols(), a, b, c);
    return c;
}

// c = a.b^T
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw shape_error("matmul_nt: inner dims differ");
    Matrix c(a.rows(), b.rows());
    detail::gemm(CblasNoTrans, CblasTrans, a.rows(), b.rows(), a.cols(), a, b, c);
    return c;
}

// c = a^T.b
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw shape_error("matmul_tn: inner dims differ");
    Matrix c(a.cols(), b.cols());
    detail::gemm(CblasTrans, CblasNoTrans, a.cols(), b.cols(), a.rows(), a, b, c);
    return c;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw shape_error("matvec: dim mismatch");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* r = a.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

// Numerically stable softmax (max subtraction).
inline Vector softmax(const Vector& v) {
    if (v.empty()) throw shape_error("softmax: empty vector");
    const double mx = *std::max_element(v.begin(), v.end());
    Vector out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (double& o : out) o /= sum;
    return out;
}

// Row-wise in-place softmax over a batch of logits.
inline void softmax_rows(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* r = m.row(i);
        const double mx = *std::max_element(r, r + m.cols());
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            r[j] = std::exp(r[j] - mx);
            sum += r[j];
        }
        for (std::size_t j = 0; j < m.cols(); ++j) r[j] /= sum;
    }
}

// Index of the maximum entry; ties resolved to the lowest index.
inline std::size_t argmax(const Vector& v) {
    if (v.empty()) throw shape_error("argmax: empty vector");
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::size_t argmax_row(const Matrix& m, std::size_t i) {
    const double* r = m.row(i);
    return static_cast<std::size_t>(std::max_element(r, r + m.cols()) - r);
}

// Uniform-bin histogram with explicit under/overflow counters so that the
// total count is conserved exactly.
struct Histogram {
    std::size_t bins = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::uint64_t> counts;
    std::uint64_t underflow = 0;
    std::uint64_t overflow = 0;

    std::uint64_t total() const {
        std::uint64_t t = underflow + overflow;
        for (auto c : counts) t += c;
        return t;
    }
};

template <typename Range>
Histogram histogram(const Range& values, std::size_t bins, double lo, double hi) {
    if (bins < 1) throw domain_error("histogram: bins must be >= 1");
    if (!(lo < hi)) throw domain_error("histogram: lo must be < hi");
    Histogram h;
    h.bins = bins;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(bins, 0);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        if (v < lo) {
            ++h.underflow;
        } else if (v >= hi) {
            // hi itself counts into the last bin
            if (v == hi)
                ++h.counts[bins - 1];
            else
                ++h.overflow;
        } else {
            auto b = static_cast<std::size_t>((v - lo) / width);
            if (b >= bins) b = bins - 1;
            ++h.counts[b];
        }
    }
    return h;
}

}  // namespace specnn

#endif
