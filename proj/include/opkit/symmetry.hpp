#pragma once

// Weak symmetries (maps preserving N(P)) split into blocks between the
// factor null spaces, and the degree-2 strong-symmetry test.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"
#include "opkit/matrix.hpp"
#include "opkit/opcore.hpp"
#include "opkit/operator.hpp"
#include "opkit/poly.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace opkit {

// Real eigenvalues of a dense float matrix, clustered within cluster_tol;
// MathError when an eigenvalue is not real.
std::vector<double> real_spectrum(const Matrix<double>& m, double cluster_tol = 1e-6);

// Distinct eigenvalues; exact over Q (MathError if the characteristic
// polynomial does not split), numeric for doubles.
template <class F>
std::vector<F> operator_spectrum(const OperatorHandle<F>& d, double cluster_tol = 1e-6) {
    if (d.is_diagonal()) {
        std::vector<F> out;
        for (const auto& e : d.entries()) {
            bool seen = false;
            for (const auto& s : out) seen = seen || is_zero(s - e.eigenvalue, is_exact_v<F> ? 0.0 : cluster_tol);
            if (!seen) out.push_back(e.eigenvalue);
        }
        return out;
    }
    if constexpr (std::is_same_v<F, Rational>) {
        const auto chi = factor_exact(characteristic_polynomial(d.to_matrix()));
        std::vector<F> out;
        for (const auto& f : chi.factors) out.push_back(-f.lambda);
        return out;
    } else if constexpr (std::is_same_v<F, double>) {
        return real_spectrum(d.to_matrix(), cluster_tol);
    } else {
        throw InputError("spectra are computed over Q or the reals only");
    }
}

namespace detail {

template <class F>
bool negligible_vec(const Vec<F>& v, double scale, double tol) {
    if constexpr (is_exact_v<F>) {
        (void)scale;
        (void)tol;
        return is_zero_vector(v);
    } else {
        return norm2(v) <= tol * std::max(1.0, scale);
    }
}

// Left inverse (B^T B)^{-1} B^T of a full-column-rank basis matrix.
template <class F>
Matrix<F> left_inverse(const Matrix<F>& b) {
    if (b.cols() == 0) return Matrix<F>(0, b.rows());
    const auto bt = b.transpose();
    const auto g = inverse(bt * b);
    if (!g) throw MathError("basis is not linearly independent");
    return *g * bt;
}

// First basis vector of ker(m) that s moves out of ker(m), if any.
template <class F>
std::optional<std::size_t> first_escape(const Matrix<F>& m, const Matrix<F>& s, const std::vector<Vec<F>>& basis,
                                        double tol) {
    const double scale = std::max(1.0, m.max_abs()) * std::max(1.0, s.max_abs());
    for (std::size_t k = 0; k < basis.size(); ++k)
        if (!negligible_vec(m * (s * basis[k]), scale * norm2(basis[k]), tol)) return k;
    return std::nullopt;
}

template <class F>
std::string vec_string(const Vec<F>& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + to_string(v[i]);
    return s + ")";
}

}  // namespace detail

template <class F>
struct SymmetryBlocks {
    OperatorDecomposition<F> decomposition;
    std::vector<std::vector<Vec<F>>> bases;  // basis of N(P_i), P_i = (D + lambda_i)^{p_i}
    std::vector<Matrix<F>> coordinates;      // left inverse of each basis matrix
    std::vector<Vec<F>> null_basis;          // basis of N(P)
    std::map<std::pair<std::size_t, std::size_t>, Matrix<F>> blocks;  // (i, j): N(P_j) -> N(P_i)

    std::size_t factor_count() const { return bases.size(); }
    const Matrix<F>& block(std::size_t i, std::size_t j) const { return blocks.at({i, j}); }
};

// Lifts H: N(P_j) -> N(P_i) (in basis coordinates) to the n x n matrix of
// inclusion_i o H o coords_j o Proj_j.
template <class F>
Matrix<F> lift_block(const SymmetryBlocks<F>& sb, std::size_t i, std::size_t j, const Matrix<F>& h) {
    const std::size_t n = sb.decomposition.base().dim();
    const auto bi = Matrix<F>::from_columns(sb.bases.at(i), n);
    if (h.rows() != sb.bases[i].size() || h.cols() != sb.bases.at(j).size())
        throw InputError("block has the wrong shape");
    if (h.rows() == 0 || h.cols() == 0) return Matrix<F>(n, n);
    return bi * h * sb.coordinates[j] * sb.decomposition.projector_matrix(j);
}

template <class F>
SymmetryBlocks<F> symmetry_blocks(const OperatorDecomposition<F>& dec, const OperatorHandle<F>& s,
                                  const Tolerance& tol = {}) {
    const auto& d = dec.base();
    if (!d.is_dense() && !d.is_diagonal()) throw InputError("symmetry blocks need a dense or diagonal operator");
    if (s.dim() != d.dim()) throw InputError("symmetry has the wrong dimension");
    const std::size_t n = d.dim();
    SymmetryBlocks<F> sb{dec, {}, {}, {}, {}};
    const auto pm = poly_matrix(d, dec.poly().expand());
    sb.null_basis = null_space(pm, tol);
    const auto sm = s.to_matrix();
    if (const auto k = detail::first_escape(pm, sm, sb.null_basis, dec.check_tol()))
        throw MathError("S is not a weak symmetry: it moves null vector " + detail::vec_string(sb.null_basis[*k]) +
                        " out of N(P)");
    for (std::size_t i = 0; i < dec.size(); ++i) {
        sb.bases.push_back(null_space(poly_matrix(d, dec.poly().factor_poly(i)), tol));
        sb.coordinates.push_back(detail::left_inverse(Matrix<F>::from_columns(sb.bases.back(), n)));
    }
    for (std::size_t i = 0; i < dec.size(); ++i)
        for (std::size_t j = 0; j < dec.size(); ++j) {
            Matrix<F> h(sb.bases[i].size(), sb.bases[j].size());
            for (std::size_t c = 0; c < sb.bases[j].size(); ++c)
                h.set_column(c, sb.coordinates[i] * dec.project(i, s(sb.bases[j][c])));
            sb.blocks.emplace(std::make_pair(i, j), std::move(h));
        }
    return sb;
}

// Sum of the lifted blocks; agrees with S on N(P).
template <class F>
Matrix<F> reconstruct_symmetry(const SymmetryBlocks<F>& sb) {
    const std::size_t n = sb.decomposition.base().dim();
    Matrix<F> r(n, n);
    for (const auto& [ij, h] : sb.blocks) r = r + lift_block(sb, ij.first, ij.second, h);
    return r;
}

// ---- degree-2 strong symmetries ---------------------------------------------

enum class StrongCondition { DoubleRoot, Paired, Unpaired };

struct StrongCheck {
    StrongCondition kind;
    std::string xi;            // xi with -xi in Spec D
    std::string partner;       // lambda_1 + lambda_2 - xi (Paired only)
    std::size_t subspace_dim;  // dimension of the subspace that must be preserved
    bool holds;
};

struct StrongSymmetryReport {
    std::vector<StrongCheck> checks;
    bool verdict = true;             // all conditions hold
    bool definition_holds = true;    // S preserves every eigenspace of P[D]
    bool agrees = true;
};

// S preserves every eigenspace ker(P[D] - mu); mu ranges over P(Spec D).
template <class F>
bool preserves_eigenspaces(const OperatorHandle<F>& d, const DensePoly<F>& p, const Matrix<F>& s,
                           const std::vector<F>& spectrum, const Tolerance& tol, double check_tol) {
    const auto pm = poly_matrix(d, p);
    for (const auto& sigma : spectrum) {
        const F mu = p(sigma);
        const auto m = pm - Matrix<F>::identity(d.dim()) * mu;
        const auto basis = null_space(m, tol);
        if (detail::first_escape(m, s, basis, check_tol)) return false;
    }
    return true;
}

template <class F>
StrongSymmetryReport strong_symmetry_degree2(const OperatorHandle<F>& d, const F& lambda1, const F& lambda2,
                                             const OperatorHandle<F>& s,
                                             std::optional<std::vector<F>> spectrum = std::nullopt,
                                             const Tolerance& tol = {}, double check_tol = kDefaultFloatCheck,
                                             double cluster_tol = 1e-6) {
    if (!d.is_dense() && !d.is_diagonal()) throw InputError("strong symmetry test needs a dense or diagonal operator");
    if (s.dim() != d.dim()) throw InputError("symmetry has the wrong dimension");
    const std::vector<F> spec = spectrum ? *spectrum : operator_spectrum(d, cluster_tol);
    const double match = is_exact_v<F> ? 0.0 : cluster_tol;
    auto in_spec = [&](const F& x) {
        for (const auto& sigma : spec)
            if (is_zero(sigma - x, match)) return true;
        return false;
    };
    const F sum = lambda1 + lambda2;
    const F xi0 = sum / from_int<F>(2);
    const auto sm = s.to_matrix();
    StrongSymmetryReport rep;
    std::vector<F> paired;  // xi values already covered by a pair
    auto check = [&](StrongCondition kind, const F& xi, const DensePoly<F>& q) {
        const auto m = poly_matrix(d, q);
        const auto basis = null_space(m, tol);
        StrongCheck c{kind, to_string(xi), "", basis.size(), !detail::first_escape(m, sm, basis, check_tol)};
        if (kind == StrongCondition::Paired) c.partner = to_string(F(sum - xi));
        rep.verdict = rep.verdict && c.holds;
        rep.checks.push_back(std::move(c));
    };
    for (const auto& sigma : spec) {
        const F xi = -sigma;
        const F partner = sum - xi;
        if (is_zero(xi - xi0, match)) {
            check(StrongCondition::DoubleRoot, xi0, DensePoly<F>::linear(xi0).pow(2));
        } else if (in_spec(-partner)) {
            bool seen = false;
            for (const auto& x : paired) seen = seen || is_zero(x - xi, match);
            if (seen) continue;
            paired.push_back(xi);
            paired.push_back(partner);
            check(StrongCondition::Paired, xi, DensePoly<F>::linear(xi) * DensePoly<F>::linear(partner));
        } else {
            check(StrongCondition::Unpaired, xi, DensePoly<F>::linear(xi));
        }
    }
    const auto p = DensePoly<F>::linear(lambda1) * DensePoly<F>::linear(lambda2);
    rep.definition_holds = preserves_eigenspaces(d, p, sm, spec, tol, check_tol);
    rep.agrees = rep.definition_holds == rep.verdict;
    return rep;
}

inline const char* to_string(StrongCondition c) {
    switch (c) {
        case StrongCondition::DoubleRoot: return "double-root";
        case StrongCondition::Paired: return "paired";
        case StrongCondition::Unpaired: return "unpaired";
    }
    return "";
}

}  // namespace opkit
