#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "supernorm/common.hpp"

namespace supernorm {

// Dense row-major matrix of doubles. All numerics in this project run in
// 64-bit floating point; shapes are validated at the operation boundaries.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
        if (r < 0 || c < 0) throw DataError("Matrix dimensions must be non-negative");
    }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rws) {
        if (rws.empty()) return Matrix();
        Matrix m(static_cast<int>(rws.size()), static_cast<int>(rws[0].size()));
        for (int i = 0; i < m.rows; ++i) {
            if (static_cast<int>(rws[static_cast<std::size_t>(i)].size()) != m.cols)
                throw DataError("Matrix::from_rows: ragged rows");
            for (int j = 0; j < m.cols; ++j) m(i, j) = rws[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        return m;
    }

    static Matrix row(const std::vector<double>& v) {
        Matrix m(1, static_cast<int>(v.size()));
        m.data = v;
        return m;
    }

    static Matrix column(const std::vector<double>& v) {
        Matrix m(static_cast<int>(v.size()), 1);
        m.data = v;
        return m;
    }

    double& operator()(int i, int j) {
        return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)];
    }
    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j)];
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::size_t size() const { return data.size(); }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw DataError("matmul shape mismatch: " + a.shape_str() + " * " + b.shape_str());
    Matrix out(a.rows, b.cols);
    // i-k-j order keeps the inner loop contiguous in both b and out
    for (int i = 0; i < a.rows; ++i) {
        for (int k = 0; k < a.cols; ++k) {
            double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.data[static_cast<std::size_t>(k) * static_cast<std::size_t>(b.cols)];
            double* orow = &out.data[static_cast<std::size_t>(i) * static_cast<std::size_t>(out.cols)];
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

inline Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw DataError("max_abs_diff shape mismatch: " + a.shape_str() + " vs " + b.shape_str());
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = std::abs(a.data[i] - b.data[i]);
        if (d > m) m = d;
    }
    return m;
}

inline double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

}  // namespace supernorm
