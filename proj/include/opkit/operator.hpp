#pragma once

// Linear operators on F^n with three interchangeable backends: a dense
// matrix, a diagonal spectral model, or a matrix-free apply callback.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"
#include "opkit/matrix.hpp"
#include "opkit/poly.hpp"

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace opkit {

// Membership tolerance for float-mode null-space and equation checks; exact
// fields compare with ==.
inline constexpr double kDefaultFloatCheck = 1e-8;

template <class F>
Vec<F> random_vector(std::mt19937_64& rng, std::size_t n) {
    Vec<F> v(n);
    if constexpr (is_exact_v<F>) {
        std::uniform_int_distribution<long> d(-5, 5);
        for (auto& x : v) x = from_int<F>(d(rng));
    } else if constexpr (std::is_same_v<F, double>) {
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (auto& x : v) x = d(rng);
    } else {
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (auto& x : v) x = F(d(rng), d(rng));
    }
    return v;
}

// a == b exactly, or within rel * max(1, |a|, |b|) for float fields.
template <class F>
bool vectors_agree(const Vec<F>& a, const Vec<F>& b, double rel = kDefaultFloatCheck) {
    if (a.size() != b.size()) return false;
    if constexpr (is_exact_v<F>) {
        return a == b;
    } else {
        return norm2(a - b) <= rel * std::max({1.0, norm2(a), norm2(b)});
    }
}

template <class F>
class OperatorHandle {
public:
    using ApplyFn = std::function<Vec<F>(const Vec<F>&)>;
    enum class Backend { Dense, Diagonal, Apply };

    struct DiagonalEntry {
        F eigenvalue;
        std::size_t multiplicity;
    };

    OperatorHandle() = default;

    static OperatorHandle dense(Matrix<F> m) {
        if (!m.square()) throw InputError("dense operator must be square");
        if (m.rows() == 0) throw InputError("operator dimension must be positive");
        OperatorHandle h;
        h.backend_ = Backend::Dense;
        h.dim_ = m.rows();
        h.dense_ = std::make_shared<const Matrix<F>>(std::move(m));
        return h;
    }

    static OperatorHandle diagonal(std::vector<DiagonalEntry> entries) {
        OperatorHandle h;
        h.backend_ = Backend::Diagonal;
        h.dim_ = 0;
        for (const auto& e : entries) {
            if (e.multiplicity == 0) throw InputError("diagonal multiplicities must be positive");
            h.dim_ += e.multiplicity;
        }
        if (h.dim_ == 0) throw InputError("operator dimension must be positive");
        h.entries_ = std::make_shared<const std::vector<DiagonalEntry>>(std::move(entries));
        h.diag_ = std::make_shared<const Vec<F>>(expand(*h.entries_));
        return h;
    }

    // One entry per coordinate.
    static OperatorHandle diagonal_values(const Vec<F>& values) {
        std::vector<DiagonalEntry> e;
        for (const auto& v : values) {
            if (!e.empty() && e.back().eigenvalue == v)
                ++e.back().multiplicity;
            else
                e.push_back({v, 1});
        }
        return diagonal(std::move(e));
    }

    // The callback must be re-entrant. Linearity is spot-checked on random
    // triples; a failure throws InputError.
    static OperatorHandle apply(std::size_t dim, ApplyFn fn, std::uint64_t seed = 7, int trials = 4) {
        if (dim == 0) throw InputError("operator dimension must be positive");
        OperatorHandle h;
        h.backend_ = Backend::Apply;
        h.dim_ = dim;
        h.fn_ = std::make_shared<const ApplyFn>(std::move(fn));
        std::mt19937_64 rng(seed);
        for (int t = 0; t < trials; ++t) {
            const auto u = random_vector<F>(rng, dim);
            const auto v = random_vector<F>(rng, dim);
            const auto ab = random_vector<F>(rng, 2);
            Vec<F> comb = scaled(u, ab[0]);
            axpy(comb, ab[1], v);
            Vec<F> lhs = h(comb);
            Vec<F> rhs = scaled(h(u), ab[0]);
            axpy(rhs, ab[1], h(v));
            if (!vectors_agree(lhs, rhs)) throw InputError("apply callback failed the linearity check");
        }
        return h;
    }

    Backend backend() const { return backend_; }
    std::size_t dim() const { return dim_; }
    bool is_dense() const { return backend_ == Backend::Dense; }
    bool is_diagonal() const { return backend_ == Backend::Diagonal; }

    const Matrix<F>& matrix() const {
        if (!dense_) throw InputError("operator has no dense matrix");
        return *dense_;
    }
    const std::vector<DiagonalEntry>& entries() const {
        if (!entries_) throw InputError("operator is not diagonal");
        return *entries_;
    }
    // Per-coordinate diagonal values.
    const Vec<F>& diagonal_vector() const {
        if (!diag_) throw InputError("operator is not diagonal");
        return *diag_;
    }

    Vec<F> operator()(const Vec<F>& v) const {
        if (v.size() != dim_)
            throw InputError("dimension mismatch: operator is " + std::to_string(dim_) + "-dimensional, vector has " +
                             std::to_string(v.size()) + " entries");
        switch (backend_) {
            case Backend::Dense:
                return *dense_ * v;
            case Backend::Diagonal: {
                Vec<F> out(v);
                for (std::size_t i = 0; i < dim_; ++i) out[i] *= (*diag_)[i];
                return out;
            }
            case Backend::Apply: {
                Vec<F> out = (*fn_)(v);
                if (out.size() != dim_) throw InputError("apply callback returned a vector of the wrong length");
                return out;
            }
        }
        return {};
    }

    // Materialized matrix (n applications for the Apply backend).
    Matrix<F> to_matrix() const {
        if (backend_ == Backend::Dense) return *dense_;
        Matrix<F> m(dim_, dim_);
        if (backend_ == Backend::Diagonal) {
            for (std::size_t i = 0; i < dim_; ++i) m(i, i) = (*diag_)[i];
            return m;
        }
        for (std::size_t j = 0; j < dim_; ++j) {
            Vec<F> e = zeros<F>(dim_);
            e[j] = from_int<F>(1);
            m.set_column(j, (*this)(e));
        }
        return m;
    }

private:
    static Vec<F> expand(const std::vector<DiagonalEntry>& entries) {
        Vec<F> out;
        for (const auto& e : entries) out.insert(out.end(), e.multiplicity, e.eigenvalue);
        return out;
    }

    Backend backend_ = Backend::Dense;
    std::size_t dim_ = 0;
    std::shared_ptr<const Matrix<F>> dense_;
    std::shared_ptr<const std::vector<DiagonalEntry>> entries_;
    std::shared_ptr<const Vec<F>> diag_;
    std::shared_ptr<const ApplyFn> fn_;
};

// Spot-checks pairwise commutation on `trials` random vectors per pair;
// throws InputError naming the first failing pair.
template <class F>
void check_commuting(const std::vector<OperatorHandle<F>>& family, std::uint64_t seed = 7, int trials = 8) {
    if (family.empty()) return;
    const std::size_t n = family.front().dim();
    for (const auto& op : family)
        if (op.dim() != n) throw InputError("operator family has mixed dimensions");
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < family.size(); ++i)
        for (std::size_t j = i + 1; j < family.size(); ++j)
            for (int t = 0; t < trials; ++t) {
                const auto v = random_vector<F>(rng, n);
                if (!vectors_agree(family[i](family[j](v)), family[j](family[i](v))))
                    throw InputError("operators " + std::to_string(i) + " and " + std::to_string(j) + " do not commute");
            }
}

// q[D] v by Horner's rule; the diagonal backend evaluates q at each eigenvalue.
template <class F>
Vec<F> apply_poly(const OperatorHandle<F>& d, const DensePoly<F>& q, const Vec<F>& v) {
    if (v.size() != d.dim()) throw InputError("apply_poly: dimension mismatch");
    if (q.is_zero_poly()) return zeros<F>(v.size());
    if (d.is_diagonal()) {
        Vec<F> out(v);
        const auto& diag = d.diagonal_vector();
        for (std::size_t i = 0; i < v.size(); ++i) out[i] *= q(diag[i]);
        return out;
    }
    const auto& c = q.coeffs();
    Vec<F> acc = scaled(v, c.back());
    for (std::size_t k = c.size() - 1; k-- > 0;) {
        acc = d(acc);
        axpy(acc, c[k], v);
    }
    return acc;
}

// (D + lambda)^p v by repeated application.
template <class F>
Vec<F> apply_factor(const OperatorHandle<F>& d, const F& lambda, unsigned p, Vec<F> v) {
    for (unsigned k = 0; k < p; ++k) {
        Vec<F> next = d(v);
        axpy(next, lambda, v);
        v = std::move(next);
    }
    return v;
}

// Dense matrix of q[D]; the operator is applied column by column.
template <class F>
Matrix<F> poly_matrix(const OperatorHandle<F>& d, const DensePoly<F>& q) {
    Matrix<F> m(d.dim(), d.dim());
    for (std::size_t j = 0; j < d.dim(); ++j) {
        Vec<F> e = zeros<F>(d.dim());
        e[j] = from_int<F>(1);
        m.set_column(j, apply_poly(d, q, e));
    }
    return m;
}

// Composition A∘B as an operator.
template <class F>
OperatorHandle<F> compose(const OperatorHandle<F>& a, const OperatorHandle<F>& b) {
    if (a.dim() != b.dim()) throw InputError("compose: dimension mismatch");
    if (a.is_dense() && b.is_dense()) return OperatorHandle<F>::dense(a.matrix() * b.matrix());
    if (a.is_diagonal() && b.is_diagonal()) {
        Vec<F> v = a.diagonal_vector();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= b.diagonal_vector()[i];
        return OperatorHandle<F>::diagonal_values(v);
    }
    return OperatorHandle<F>::apply(a.dim(), [a, b](const Vec<F>& v) { return a(b(v)); });
}

// q[D] as an operator with the same backend family as D.
template <class F>
OperatorHandle<F> poly_operator(const OperatorHandle<F>& d, const DensePoly<F>& q) {
    if (d.is_dense()) return OperatorHandle<F>::dense(poly_matrix(d, q));
    if (d.is_diagonal()) {
        Vec<F> v = d.diagonal_vector();
        for (auto& x : v) x = q(x);
        return OperatorHandle<F>::diagonal_values(v);
    }
    return OperatorHandle<F>::apply(d.dim(), [d, q](const Vec<F>& v) { return apply_poly(d, q, v); });
}

}  // namespace opkit
