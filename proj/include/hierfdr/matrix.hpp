#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hierfdr {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// [left, right] column-wise; row counts must agree (either side may have zero columns).
inline Matrix hconcat(const Matrix& left, const Matrix& right) {
    if (left.rows != right.rows) throw std::invalid_argument("hconcat: row counts differ");
    Matrix out(left.rows, left.cols + right.cols);
    for (std::size_t i = 0; i < left.rows; ++i) {
        for (std::size_t j = 0; j < left.cols; ++j) out(i, j) = left(i, j);
        for (std::size_t j = 0; j < right.cols; ++j) out(i, left.cols + j) = right(i, j);
    }
    return out;
}

inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(idx.size(), m.cols);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto src = m.row(idx[r]);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

}  // namespace hierfdr
