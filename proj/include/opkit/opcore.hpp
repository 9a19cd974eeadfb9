#pragma once

// Partition-of-unity identities applied to concrete operators: projectors,
// null-space splitting, the forward/backward maps for P u = f and their
// alpha-system generalization, filtration pieces and spectral reports.
//
// P[D] = leading * prod_i (D + lambda_i)^{p_i}. The complements P^i and the
// cofactors Q_i are those of the monic product, so the factor problems read
// (D + lambda_i)^{p_i} u_i = f / leading.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"
#include "opkit/matrix.hpp"
#include "opkit/mpoly.hpp"
#include "opkit/operator.hpp"
#include "opkit/poly.hpp"
#include "opkit/posets.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace opkit {

inline constexpr std::size_t kMaxMaterializedDim = 64;

template <class F>
class OperatorDecomposition {
public:
    OperatorDecomposition(OperatorHandle<F> d, FactoredPoly<F> p, const Tolerance& tol = {},
                          double check_tol = kDefaultFloatCheck)
        : d_(std::move(d)), cert_(partition_of_unity(p, tol)), check_tol_(check_tol) {}

    const OperatorHandle<F>& base() const { return d_; }
    const FactoredPoly<F>& poly() const { return cert_.source; }
    const UnityCertificate<F>& certificate() const { return cert_; }
    std::size_t size() const { return cert_.cofactors.size(); }
    double check_tol() const { return check_tol_; }

    Vec<F> apply_P(const Vec<F>& v) const {
        Vec<F> out = v;
        for (const auto& f : poly().factors) out = apply_factor(d_, f.lambda, f.multiplicity, std::move(out));
        return scaled(out, poly().leading);
    }
    // (D + lambda_i)^{p_i} v
    Vec<F> apply_factor_power(std::size_t i, const Vec<F>& v) const {
        const auto& f = poly().factors.at(i);
        return apply_factor(d_, f.lambda, f.multiplicity, v);
    }
    // P^i[D] v
    Vec<F> apply_complement(std::size_t i, const Vec<F>& v) const {
        Vec<F> out = v;
        for (std::size_t j = 0; j < poly().factors.size(); ++j)
            if (j != i) out = apply_factor_power(j, out);
        return out;
    }
    Vec<F> apply_cofactor(std::size_t i, const Vec<F>& v) const { return apply_poly(d_, cert_.cofactors.at(i), v); }
    // Proj_i v = Q_i[D] P^i[D] v
    Vec<F> project(std::size_t i, const Vec<F>& v) const { return apply_cofactor(i, apply_complement(i, v)); }

    // Dense or diagonal backends with n <= 64 only; elsewhere projectors act
    // through applies.
    Matrix<F> projector_matrix(std::size_t i) const {
        if (d_.backend() == OperatorHandle<F>::Backend::Apply || d_.dim() > kMaxMaterializedDim)
            throw InputError("projector matrices are materialized only for dense or diagonal operators with n <= 64");
        Matrix<F> m(d_.dim(), d_.dim());
        for (std::size_t j = 0; j < d_.dim(); ++j) {
            Vec<F> e = zeros<F>(d_.dim());
            e[j] = from_int<F>(1);
            m.set_column(j, project(i, e));
        }
        return m;
    }

    // |x| <= check_tol * scale (exact fields: x == 0).
    bool negligible(const Vec<F>& x, double scale) const {
        if constexpr (is_exact_v<F>) {
            return is_zero_vector(x);
        } else {
            return norm2(x) <= check_tol_ * std::max(1.0, scale);
        }
    }

private:
    OperatorHandle<F> d_;
    UnityCertificate<F> cert_;
    double check_tol_;
};

template <class F>
OperatorDecomposition<F> build_decomposition(const OperatorHandle<F>& d, const FactoredPoly<F>& p,
                                             const Tolerance& tol = {}, double check_tol = kDefaultFloatCheck) {
    return OperatorDecomposition<F>(d, p, tol, check_tol);
}

template <class F>
struct SolveReport {
    double residual = 0.0;  // |P u - f| / max(|f|, 1)
    bool exact = false;     // P u == f exactly (exact fields)
    std::vector<Vec<F>> components;
    Vec<F> reconstruction;
};

template <class F>
std::vector<Vec<F>> split_nullvector(const OperatorDecomposition<F>& dec, const Vec<F>& u) {
    const Vec<F> pu = dec.apply_P(u);
    if (!dec.negligible(pu, norm2(u)))
        throw MathError("vector is not in the null space of P: |P u| = " + to_string(norm2(pu)));
    std::vector<Vec<F>> parts;
    Vec<F> sum = zeros<F>(u.size());
    for (std::size_t i = 0; i < dec.size(); ++i) {
        parts.push_back(dec.project(i, u));
        sum = sum + parts.back();
        if (!dec.negligible(dec.apply_factor_power(i, parts.back()), norm2(u)))
            throw MathError("component " + std::to_string(i) + " fails its factor equation");
    }
    if (!dec.negligible(sum - u, norm2(u))) throw MathError("components do not sum to u");
    return parts;
}

// F: u -> (P^0 u, ..., P^l u).
template <class F>
std::vector<Vec<F>> solve_forward(const OperatorDecomposition<F>& dec, const Vec<F>& u) {
    std::vector<Vec<F>> out;
    for (std::size_t i = 0; i < dec.size(); ++i) out.push_back(dec.apply_complement(i, u));
    return out;
}

template <class F>
double relative_residual(const Vec<F>& pu, const Vec<F>& f) {
    return norm2(pu - f) / std::max(norm2(f), 1.0);
}

// B: (u_0, ..., u_l) -> sum_i Q_i[D] u_i.
template <class F>
SolveReport<F> solve_backward(const OperatorDecomposition<F>& dec, const std::vector<Vec<F>>& tuple, const Vec<F>& f) {
    if (tuple.size() != dec.size())
        throw InputError("tuple has " + std::to_string(tuple.size()) + " entries, expected " + std::to_string(dec.size()));
    const F inv_lead = from_int<F>(1) / dec.poly().leading;
    const Vec<F> fc = scaled(f, inv_lead);
    for (std::size_t i = 0; i < tuple.size(); ++i)
        if (!dec.negligible(dec.apply_factor_power(i, tuple[i]) - fc, norm2(fc)))
            throw MathError("tuple entry " + std::to_string(i) + " fails its factor equation");
    SolveReport<F> rep;
    rep.components = tuple;
    rep.reconstruction = zeros<F>(f.size());
    for (std::size_t i = 0; i < tuple.size(); ++i) rep.reconstruction = rep.reconstruction + dec.apply_cofactor(i, tuple[i]);
    const Vec<F> pu = dec.apply_P(rep.reconstruction);
    rep.residual = relative_residual(pu, f);
    if constexpr (is_exact_v<F>) rep.exact = pu == f;
    return rep;
}

// ---- alpha systems --------------------------------------------------------

template <class F>
Vec<F> apply_subset(const std::vector<OperatorHandle<F>>& factors, Mask j, Vec<F> v) {
    for (unsigned i : mask_indices(j)) v = factors.at(i)(v);
    return v;
}

// P^J = prod_{j not in J} P_j
template <class F>
Vec<F> apply_alpha_complement(const std::vector<OperatorHandle<F>>& factors, Mask j, const Vec<F>& v) {
    const Mask full = static_cast<Mask>((Mask{1} << factors.size()) - 1);
    return apply_subset(factors, full & ~j, v);
}

template <class F>
std::map<Mask, Vec<F>> alpha_forward(const std::vector<OperatorHandle<F>>& factors, const AlphaSystem& alpha,
                                     const Vec<F>& u) {
    std::map<Mask, Vec<F>> out;
    for (Mask j : alpha.members()) out.emplace(j, apply_alpha_complement(factors, j, u));
    return out;
}

template <class F>
struct AlphaSolveReport {
    SolveReport<F> solve;
    bool disjoint = false;            // members pairwise disjoint
    bool forward_inverts = false;     // F(B(tuple)) == tuple
};

inline bool pairwise_disjoint(const AlphaSystem& alpha) {
    const auto& m = alpha.members();
    for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t b = a + 1; b < m.size(); ++b)
            if ((m[a] & m[b]) != 0) return false;
    return true;
}

// B(tuple) = sum_J Q_J u_J for tuple entries with P_J u_J = f.
template <class F>
AlphaSolveReport<F> alpha_solve(const std::vector<OperatorHandle<F>>& factors, const AlphaSystem& alpha,
                                const std::map<Mask, OperatorHandle<F>>& cofactors, const Vec<F>& f,
                                const std::map<Mask, Vec<F>>& tuple, double check_tol = kDefaultFloatCheck,
                                std::uint64_t seed = 7) {
    if (factors.size() != alpha.ground().size()) throw InputError("alpha_solve: factor count does not match |L|");
    require_decomposition_role(alpha);
    check_commuting(factors, seed);
    auto negligible = [&](const Vec<F>& x, double scale) {
        if constexpr (is_exact_v<F>)
            return is_zero_vector(x);
        else
            return norm2(x) <= check_tol * std::max(1.0, scale);
    };
    const std::size_t n = f.size();
    // Spot-check sum_J Q_J P^J = id.
    std::mt19937_64 rng(seed);
    for (int t = 0; t < 4; ++t) {
        const auto v = random_vector<F>(rng, n);
        Vec<F> s = zeros<F>(n);
        for (Mask j : alpha.members()) {
            const auto it = cofactors.find(j);
            if (it == cofactors.end()) throw InputError("missing cofactor for J = " + mask_to_string(j));
            s = s + it->second(apply_alpha_complement(factors, j, v));
        }
        if (!negligible(s - v, norm2(v))) throw MathError("cofactors do not satisfy the alpha identity");
    }
    AlphaSolveReport<F> rep;
    rep.solve.reconstruction = zeros<F>(n);
    for (Mask j : alpha.members()) {
        const auto it = tuple.find(j);
        if (it == tuple.end()) throw InputError("tuple has no entry for J = " + mask_to_string(j));
        if (!negligible(apply_subset(factors, j, it->second) - f, norm2(f)))
            throw MathError("tuple entry for J = " + mask_to_string(j) + " fails P_J u_J = f");
        rep.solve.components.push_back(it->second);
        rep.solve.reconstruction = rep.solve.reconstruction + cofactors.at(j)(it->second);
    }
    const Vec<F> pu = apply_subset(factors, alpha.ground().full(), rep.solve.reconstruction);
    rep.solve.residual = relative_residual(pu, f);
    if constexpr (is_exact_v<F>) rep.solve.exact = pu == f;
    rep.disjoint = pairwise_disjoint(alpha);
    const auto back = alpha_forward(factors, alpha, rep.solve.reconstruction);
    rep.forward_inverts = true;
    for (const auto& [j, v] : back)
        if (!negligible(v - tuple.at(j), norm2(v))) rep.forward_inverts = false;
    return rep;
}

// Q[D_1, ..., D_k] for a commuting family; dense when every member is dense,
// diagonal when every member is diagonal, matrix-free otherwise.
template <class F>
OperatorHandle<F> evaluate_on_family(const MultiPoly& q, const std::vector<OperatorHandle<F>>& family) {
    if (family.size() != q.nvars()) throw InputError("polynomial variable count does not match the operator family");
    const std::size_t n = family.front().dim();
    const bool all_diag = std::all_of(family.begin(), family.end(), [](const auto& h) { return h.is_diagonal(); });
    if (all_diag) {
        Vec<F> vals = zeros<F>(n);
        for (std::size_t c = 0; c < n; ++c)
            for (const auto& [e, coeff] : q.terms()) {
                F t = from_rational<F>(coeff);
                for (std::size_t k = 0; k < e.size(); ++k)
                    for (unsigned r = 0; r < e[k]; ++r) t *= family[k].diagonal_vector()[c];
                vals[c] += t;
            }
        return OperatorHandle<F>::diagonal_values(vals);
    }
    auto fn = [q, family, n](const Vec<F>& v) {
        Vec<F> out = zeros<F>(n);
        for (const auto& [e, coeff] : q.terms()) {
            Vec<F> w = v;
            for (std::size_t k = 0; k < e.size(); ++k)
                for (unsigned r = 0; r < e[k]; ++r) w = family[k](w);
            axpy(out, from_rational<F>(coeff), w);
        }
        return out;
    };
    const bool all_dense = std::all_of(family.begin(), family.end(), [](const auto& h) { return h.is_dense(); });
    if (all_dense) {
        Matrix<F> m(n, n);
        for (std::size_t j = 0; j < n; ++j) {
            Vec<F> e = zeros<F>(n);
            e[j] = from_int<F>(1);
            m.set_column(j, fn(e));
        }
        return OperatorHandle<F>::dense(std::move(m));
    }
    return OperatorHandle<F>::apply(n, fn);
}

// ---- filtration ---------------------------------------------------------

template <class F>
struct FiltrationExpansion {
    std::vector<Vec<F>> pieces;  // u_i^{(s)} = a_s (D + lambda_i)^s P^i u_i
    std::vector<F> coefficients; // a_s, the expansion of Q_i in powers of (x + lambda_i)
    F leading;                   // a_0 = prod_{j != i} (lambda_j - lambda_i)^{-p_j}
};

template <class F>
FiltrationExpansion<F> filtration_expand(const OperatorDecomposition<F>& dec, std::size_t i, const Vec<F>& ui) {
    if (i >= dec.size()) throw InputError("factor index out of range");
    if (!dec.negligible(dec.apply_factor_power(i, ui), norm2(ui)))
        throw MathError("vector is not annihilated by (D + lambda_" + std::to_string(i) + ")^p_" + std::to_string(i));
    FiltrationExpansion<F> out;
    const auto& P = dec.poly();
    out.coefficients = P.factors.size() == 1 ? std::vector<F>{from_int<F>(1)} : normalized_cofactor_series(P, i);
    out.coefficients.resize(P.factors[i].multiplicity, from_int<F>(0));
    out.leading = out.coefficients.front();
    Vec<F> w = dec.apply_complement(i, ui);
    const auto& lambda = P.factors[i].lambda;
    for (std::size_t s = 0; s < out.coefficients.size(); ++s) {
        out.pieces.push_back(scaled(w, out.coefficients[s]));
        w = apply_factor(dec.base(), lambda, 1, std::move(w));
    }
    return out;
}

// ---- spectral report ------------------------------------------------------

template <class F>
struct EigenComponent {
    F lambda;                 // factor (x + lambda); D-eigenvalue -lambda
    unsigned multiplicity;    // p_i in P[x] - mu
    std::size_t dimension;    // dim N((D + lambda)^p)
    std::optional<Matrix<F>> projector;  // Proj_i on N(P - mu), dense n <= 64
};

template <class F>
struct EigenStructure {
    F mu;
    FactoredPoly<F> shifted;  // P[x] - mu
    std::vector<EigenComponent<F>> components;
    std::size_t total_dimension = 0;        // sum of component dimensions
    std::size_t independent_dimension = 0;  // n - rank(P[D] - mu)
    bool consistent = false;
};

namespace detail {

template <class F>
std::size_t operator_nullity(const OperatorHandle<F>& op, const Tolerance& tol) {
    if (op.is_diagonal()) {
        double scale = 1.0;
        for (const auto& x : op.diagonal_vector()) scale = std::max(scale, magnitude(x));
        std::size_t k = 0;
        for (const auto& x : op.diagonal_vector()) {
            if constexpr (is_exact_v<F>)
                k += is_zero(x, 0.0);
            else
                k += magnitude(x) <= tol.eps * scale * static_cast<double>(op.dim());
        }
        return k;
    }
    const auto m = op.to_matrix();
    return m.cols() - rank(m, tol);
}

template <class F>
FactoredPoly<F> factor_shifted(const DensePoly<F>& p, double cluster_tol) {
    if constexpr (std::is_same_v<F, Rational>) {
        (void)cluster_tol;
        return factor_exact(p);
    } else if constexpr (std::is_same_v<F, Complex>) {
        return factor_numeric(p, cluster_tol);
    } else if constexpr (std::is_same_v<F, double>) {
        std::vector<Complex> c;
        for (double x : p.coeffs()) c.emplace_back(x, 0.0);
        const auto fc = factor_numeric(DensePoly<Complex>(c), cluster_tol);
        FactoredPoly<double> out;
        out.leading = p.leading();
        for (const auto& f : fc.factors) {
            if (f.lambda.imag() != 0.0) throw MathError("P - mu has non-real roots; use complex mode");
            out.factors.push_back({f.lambda.real(), f.multiplicity});
        }
        return out;
    } else {
        throw InputError("eigen_structure is not available over Q(i)");
    }
}

}  // namespace detail

// Decomposes the mu-eigenspace of P[D] into generalized D-eigenspaces.
template <class F>
EigenStructure<F> eigen_structure(const OperatorDecomposition<F>& dec, const F& mu, const Tolerance& tol = {},
                                  double cluster_tol = 1e-6) {
    const auto& d = dec.base();
    if (d.backend() == OperatorHandle<F>::Backend::Apply)
        throw InputError("spectral reports need a dense or diagonal operator");
    EigenStructure<F> out;
    out.mu = mu;
    const DensePoly<F> shifted = dec.poly().expand() - DensePoly<F>::constant(mu);
    if (shifted.degree() < 1) throw MathError("P - mu is constant");
    out.shifted = detail::factor_shifted(shifted, cluster_tol);
    const auto sub = build_decomposition(d, out.shifted, tol, dec.check_tol());
    const bool materialize = d.dim() <= kMaxMaterializedDim;
    for (std::size_t i = 0; i < out.shifted.factors.size(); ++i) {
        const auto& f = out.shifted.factors[i];
        EigenComponent<F> c{f.lambda, f.multiplicity, 0, std::nullopt};
        const DensePoly<F> fp = out.shifted.factor_poly(i);
        c.dimension = detail::operator_nullity(poly_operator(d, fp), tol);
        if (materialize) c.projector = sub.projector_matrix(i);
        out.total_dimension += c.dimension;
        out.components.push_back(std::move(c));
    }
    out.independent_dimension = detail::operator_nullity(poly_operator(d, shifted), tol);
    out.consistent = out.total_dimension == out.independent_dimension;
    return out;
}

}  // namespace opkit
