#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace mozart {

// Dense row-major 2-D array of doubles. The universal carrier for batches,
// weights, gradients, and prediction tables.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows_init) {
        Matrix m;
        m.rows = rows_init.size();
        m.cols = m.rows ? rows_init.begin()->size() : 0;
        m.data.reserve(m.rows * m.cols);
        for (const auto& r : rows_init)
            for (double v : r) m.data.push_back(v);
        return m;
    }

    static Matrix column(const std::vector<double>& values) {
        Matrix m(values.size(), 1);
        m.data = values;
        return m;
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Matrix& o) const = default;
};

// C = A (n x k) * B (k x m)
Matrix matmul(const Matrix& a, const Matrix& b);
// C = A^T (k x n -> n x k) * B (k x m); saves an explicit transpose.
Matrix matmul_at(const Matrix& a, const Matrix& b);
// C = A (n x k) * B^T (m x k)
Matrix matmul_bt(const Matrix& a, const Matrix& b);

}  // namespace mozart
