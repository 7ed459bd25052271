#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mgsim/errors.hpp"

namespace mgsim {

/// Dense row-major matrix. The networks handled here have a few dozen buses
/// at most, so no sparse storage is provided.
template <typename T>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<const T> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

inline constexpr double kPivotThreshold = 1e-12;

/// Solve A x = b by Gaussian elimination with partial (row) pivoting.
/// Throws SingularMatrix when the largest available pivot falls below
/// kPivotThreshold in magnitude.
inline std::vector<double> solve_linear(Matrix<double> a, std::vector<double> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) {
        throw InvalidParameter("solve_linear: dimension mismatch");
    }

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        double best = std::abs(a(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            if (const double m = std::abs(a(r, col)); m > best) {
                best = m;
                pivot = r;
            }
        }
        if (best < kPivotThreshold) {
            throw SingularMatrix("solve_linear: pivot below threshold in column " +
                                 std::to_string(col));
        }
        if (pivot != col) {
            std::swap_ranges(a.row(col).begin(), a.row(col).end(), a.row(pivot).begin());
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a(r, col) / a(col, col);
            if (factor == 0.0) continue;
            a(r, col) = 0.0;
            for (std::size_t c = col + 1; c < n; ++c) a(r, c) -= factor * a(col, c);
            b[r] -= factor * b[col];
        }
    }

    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a(i, c) * x[c];
        x[i] = acc / a(i, i);
    }
    return x;
}

}  // namespace mgsim
