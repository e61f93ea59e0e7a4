#ifndef ROTS_MATRIX_HPP
#define ROTS_MATRIX_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rots {

// Dense row-major matrix, sized for the small transport problems this
// library solves (level partitions are capped at 64 groups per side).
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative shape");
    }

    double& operator()(int i, int j) {
        return data[static_cast<std::size_t>(i) * cols + j];
    }
    double operator()(int i, int j) const {
        return data[static_cast<std::size_t>(i) * cols + j];
    }

    bool same_shape(const Matrix& other) const {
        return rows == other.rows && cols == other.cols;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    std::vector<double> row_sums() const {
        std::vector<double> s(rows, 0.0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) s[i] += (*this)(i, j);
        return s;
    }

    std::vector<double> col_sums() const {
        std::vector<double> s(cols, 0.0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) s[j] += (*this)(i, j);
        return s;
    }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

// Cosine similarity; zero-norm vectors are treated as similar to nothing.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline std::vector<double> scaled(std::span<const double> a, double s) {
    std::vector<double> out(a.begin(), a.end());
    for (double& x : out) x *= s;
    return out;
}

inline void add_scaled(std::vector<double>& acc, std::span<const double> a, double s) {
    if (acc.size() != a.size()) throw std::invalid_argument("add_scaled: length mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) acc[i] += s * a[i];
}

} // namespace rots

#endif // ROTS_MATRIX_HPP
