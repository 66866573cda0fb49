#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "litmeth/error.hpp"

namespace litmeth {

// Dense row-major matrix of doubles. Vectors are 1xN tensors. All model
// math goes through the free functions below, which check shapes and
// name their operands on mismatch.
struct Tensor2D {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2D() = default;
    Tensor2D(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Tensor2D(std::size_t r, std::size_t c, std::vector<double> values)
        : rows(r), cols(c), data(std::move(values)) {
        if (data.size() != rows * cols)
            throw DimensionError("Tensor2D: " + std::to_string(data.size()) + " values for " +
                                 std::to_string(rows) + "x" + std::to_string(cols));
    }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::size_t size() const { return data.size(); }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    void fill(double v) { std::fill(data.begin(), data.end(), v); }

    bool operator==(const Tensor2D&) const = default;
};

namespace detail {

inline void require(bool ok, const char* op, const Tensor2D& a, const Tensor2D& b) {
    if (!ok)
        throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                             b.shape_str());
}

}  // namespace detail

// out += alpha * a. Shapes must match.
inline void axpy(double alpha, const Tensor2D& a, Tensor2D& out) {
    detail::require(a.rows == out.rows && a.cols == out.cols, "axpy", a, out);
    for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] += alpha * a.data[i];
}

inline Tensor2D matmul(const Tensor2D& a, const Tensor2D& b) {
    detail::require(a.cols == b.rows, "matmul", a, b);
    Tensor2D out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

// a^T * b, without materializing the transpose.
inline Tensor2D matmul_transpose_a(const Tensor2D& a, const Tensor2D& b) {
    detail::require(a.rows == b.rows, "matmul_transpose_a", a, b);
    Tensor2D out(a.cols, b.cols);
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* arow = a.row(k);
        const double* brow = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            double aki = arow[i];
            if (aki == 0.0) continue;
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
        }
    }
    return out;
}

// a * b^T.
inline Tensor2D matmul_transpose_b(const Tensor2D& a, const Tensor2D& b) {
    detail::require(a.cols == b.cols, "matmul_transpose_b", a, b);
    Tensor2D out(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* brow = b.row(j);
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) sum += arow[k] * brow[k];
            orow[j] = sum;
        }
    }
    return out;
}

inline Tensor2D add(const Tensor2D& a, const Tensor2D& b) {
    detail::require(a.rows == b.rows && a.cols == b.cols, "add", a, b);
    Tensor2D out = a;
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
    return out;
}

}  // namespace litmeth
