#pragma once

// Dense row-major matrices over any opkit field, with the elimination kernel
// (rank, null space, consistent solve, subspace intersection) used by the
// verification code. Exact fields pivot on the first nonzero entry; floating
// fields use partial pivoting and a relative threshold.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

namespace opkit {

template <class F>
using Vec = std::vector<F>;

template <class F>
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, from_int<F>(0)) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = from_int<F>(1);
        return m;
    }

    static Matrix from_rows(const std::vector<Vec<F>>& rows) {
        if (rows.empty()) return {};
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_) throw InputError("ragged matrix rows");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    static Matrix from_columns(const std::vector<Vec<F>>& cols, std::size_t nrows) {
        Matrix m(nrows, cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j].size() != nrows) throw InputError("column length mismatch");
            for (std::size_t i = 0; i < nrows; ++i) m(i, j) = cols[j][i];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    F& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    const F& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vec<F> column(std::size_t j) const {
        Vec<F> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    void set_column(std::size_t j, const Vec<F>& c) {
        for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
    }

    std::vector<Vec<F>> columns() const {
        std::vector<Vec<F>> out;
        out.reserve(cols_);
        for (std::size_t j = 0; j < cols_; ++j) out.push_back(column(j));
        return out;
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    // Copies `block` into this matrix with its top-left corner at (r, c).
    void place(std::size_t r, std::size_t c, const Matrix& block) {
        for (std::size_t i = 0; i < block.rows(); ++i)
            for (std::size_t j = 0; j < block.cols(); ++j) (*this)(r + i, c + j) = block(i, j);
    }

    Matrix& operator+=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same(o);
        for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
        return *this;
    }
    Matrix& operator*=(const F& s) {
        for (auto& x : data_) x *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, const F& s) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= from_int<F>(-1); }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw InputError("matrix product dimension mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const F& aik = a(i, k);
                if (is_zero(aik)) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    friend Vec<F> operator*(const Matrix& a, const Vec<F>& v) {
        if (a.cols_ != v.size()) throw InputError("matrix-vector dimension mismatch");
        Vec<F> out(a.rows_, from_int<F>(0));
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t j = 0; j < a.cols_; ++j) out[i] += a(i, j) * v[j];
        return out;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    double max_abs() const {
        double m = 0.0;
        for (const auto& x : data_) m = std::max(m, magnitude(x));
        return m;
    }

    bool is_zero_matrix(double thresh = 0.0) const {
        return std::all_of(data_.begin(), data_.end(), [&](const F& x) { return is_zero(x, thresh); });
    }

private:
    void check_same(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw InputError("matrix shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<F> data_;
};

// ---- vector helpers ------------------------------------------------------

template <class F>
Vec<F> zeros(std::size_t n) {
    return Vec<F>(n, from_int<F>(0));
}

template <class F>
Vec<F>& axpy(Vec<F>& y, const F& a, const Vec<F>& x) {
    if (y.size() != x.size()) throw InputError("vector length mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
    return y;
}

template <class F>
Vec<F> operator+(Vec<F> a, const Vec<F>& b) {
    return axpy(a, from_int<F>(1), b);
}

template <class F>
Vec<F> operator-(Vec<F> a, const Vec<F>& b) {
    return axpy(a, from_int<F>(-1), b);
}

template <class F>
Vec<F> scaled(Vec<F> v, const F& s) {
    for (auto& x : v) x *= s;
    return v;
}

template <class F>
double norm2(const Vec<F>& v) {
    double s = 0.0;
    for (const auto& x : v) {
        double m = magnitude(x);
        s += m * m;
    }
    return std::sqrt(s);
}

template <class F>
bool is_zero_vector(const Vec<F>& v, double thresh = 0.0) {
    return std::all_of(v.begin(), v.end(), [&](const F& x) { return is_zero(x, thresh); });
}

// ---- elimination kernel --------------------------------------------------

template <class F>
struct Echelon {
    Matrix<F> reduced;                 // reduced row echelon form
    std::vector<std::size_t> pivots;   // pivot column of each nonzero row
};

template <class F>
double zero_threshold(const Matrix<F>& m, const Tolerance& tol) {
    if constexpr (is_exact_v<F>) {
        return 0.0;
    } else {
        return tol.eps * std::max<double>(1.0, m.max_abs()) * static_cast<double>(std::max(m.rows(), m.cols()));
    }
}

// Reduced row echelon form; only the first `ncols` columns are eligible as
// pivots (the rest ride along, e.g. an augmented right-hand side).
template <class F>
Echelon<F> rref(Matrix<F> m, const Tolerance& tol = {}, std::optional<std::size_t> ncols = std::nullopt) {
    const std::size_t pc = ncols.value_or(m.cols());
    const double thresh = zero_threshold(m, tol);
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t col = 0; col < pc && row < m.rows(); ++col) {
        std::size_t best = m.rows();
        double best_mag = 0.0;
        for (std::size_t i = row; i < m.rows(); ++i) {
            if (is_zero(m(i, col), thresh)) continue;
            if constexpr (is_exact_v<F>) {
                best = i;
                break;
            } else {
                double mag = magnitude(m(i, col));
                if (mag > best_mag) {
                    best_mag = mag;
                    best = i;
                }
            }
        }
        if (best == m.rows()) continue;
        if (best != row)
            for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(row, j), m(best, j));
        const F inv = from_int<F>(1) / m(row, col);
        for (std::size_t j = col; j < m.cols(); ++j) m(row, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == row || is_zero(m(i, col))) continue;
            const F factor = m(i, col);
            for (std::size_t j = col; j < m.cols(); ++j) m(i, j) -= factor * m(row, j);
        }
        if constexpr (!is_exact_v<F>) {
            for (std::size_t i = 0; i < m.rows(); ++i)
                if (i != row) m(i, col) = from_int<F>(0);
        }
        pivots.push_back(col);
        ++row;
    }
    return {std::move(m), std::move(pivots)};
}

template <class F>
std::size_t rank(const Matrix<F>& m, const Tolerance& tol = {}) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    return rref(m, tol).pivots.size();
}

// Basis of the null space, one vector per free column.
template <class F>
std::vector<Vec<F>> null_space(const Matrix<F>& m, const Tolerance& tol = {}) {
    std::vector<Vec<F>> basis;
    if (m.cols() == 0) return basis;
    if (m.rows() == 0) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            Vec<F> e = zeros<F>(m.cols());
            e[j] = from_int<F>(1);
            basis.push_back(std::move(e));
        }
        return basis;
    }
    const auto ech = rref(m, tol);
    std::vector<bool> is_pivot(m.cols(), false);
    for (auto p : ech.pivots) is_pivot[p] = true;
    for (std::size_t free = 0; free < m.cols(); ++free) {
        if (is_pivot[free]) continue;
        Vec<F> v = zeros<F>(m.cols());
        v[free] = from_int<F>(1);
        for (std::size_t r = 0; r < ech.pivots.size(); ++r) v[ech.pivots[r]] = -ech.reduced(r, free);
        basis.push_back(std::move(v));
    }
    return basis;
}

// A particular solution of m x = b, or nullopt when inconsistent.
template <class F>
std::optional<Vec<F>> solve(const Matrix<F>& m, const Vec<F>& b, const Tolerance& tol = {}) {
    if (b.size() != m.rows()) throw InputError("solve: right-hand side length mismatch");
    Matrix<F> aug(m.rows(), m.cols() + 1);
    aug.place(0, 0, m);
    aug.set_column(m.cols(), b);
    const auto ech = rref(aug, tol, m.cols());
    double thresh = 0.0;
    if constexpr (!is_exact_v<F>) thresh = zero_threshold(aug, tol) * 10.0;
    for (std::size_t r = ech.pivots.size(); r < m.rows(); ++r)
        if (!is_zero(ech.reduced(r, m.cols()), thresh)) return std::nullopt;
    Vec<F> x = zeros<F>(m.cols());
    for (std::size_t r = 0; r < ech.pivots.size(); ++r) x[ech.pivots[r]] = ech.reduced(r, m.cols());
    return x;
}

template <class F>
std::optional<Matrix<F>> inverse(const Matrix<F>& m, const Tolerance& tol = {}) {
    if (!m.square()) throw InputError("inverse of a non-square matrix");
    const std::size_t n = m.rows();
    Matrix<F> aug(n, 2 * n);
    aug.place(0, 0, m);
    aug.place(0, n, Matrix<F>::identity(n));
    const auto ech = rref(aug, tol, n);
    if (ech.pivots.size() != n) return std::nullopt;
    Matrix<F> inv(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv(i, j) = ech.reduced(i, n + j);
    return inv;
}

// Basis (as columns of the result) of the column space.
template <class F>
std::vector<Vec<F>> column_space(const Matrix<F>& m, const Tolerance& tol = {}) {
    std::vector<Vec<F>> basis;
    if (m.rows() == 0 || m.cols() == 0) return basis;
    const auto ech = rref(m, tol);
    for (auto p : ech.pivots) basis.push_back(m.column(p));
    return basis;
}

// Intersection of two subspaces of F^n given by spanning sets.
template <class F>
std::vector<Vec<F>> intersect_subspaces(const std::vector<Vec<F>>& a, const std::vector<Vec<F>>& b, std::size_t n,
                                        const Tolerance& tol = {}) {
    if (a.empty() || b.empty()) return {};
    Matrix<F> ab(n, a.size() + b.size());
    for (std::size_t j = 0; j < a.size(); ++j) ab.set_column(j, a[j]);
    for (std::size_t j = 0; j < b.size(); ++j) ab.set_column(a.size() + j, scaled(b[j], from_int<F>(-1)));
    std::vector<Vec<F>> spanning;
    for (const auto& coeffs : null_space(ab, tol)) {
        Vec<F> v = zeros<F>(n);
        for (std::size_t j = 0; j < a.size(); ++j) axpy(v, coeffs[j], a[j]);
        spanning.push_back(std::move(v));
    }
    if (spanning.empty()) return {};
    return column_space(Matrix<F>::from_columns(spanning, n), tol);
}

// True when span(vectors) is contained in span(basis).
template <class F>
bool spans_contain(const std::vector<Vec<F>>& basis, const std::vector<Vec<F>>& vectors, std::size_t n,
                   const Tolerance& tol = {}) {
    if (vectors.empty()) return true;
    std::vector<Vec<F>> all = basis;
    all.insert(all.end(), vectors.begin(), vectors.end());
    const std::size_t r0 = basis.empty() ? 0 : rank(Matrix<F>::from_columns(basis, n), tol);
    return rank(Matrix<F>::from_columns(all, n), tol) == r0;
}

template <class F>
Matrix<F> matrix_power(const Matrix<F>& m, unsigned p) {
    Matrix<F> out = Matrix<F>::identity(m.rows());
    for (unsigned k = 0; k < p; ++k) out = out * m;
    return out;
}

}  // namespace opkit
