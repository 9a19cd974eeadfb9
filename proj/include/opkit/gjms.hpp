#pragma once

// GJMS operators on Einstein manifolds realized on diagonal spectral models
// of the Laplacian: P_k = prod (Delta + c_i Sc) = prod (Y + b_i Sc) with the
// conformal Laplacian Y = Delta + c_1 Sc.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"
#include "opkit/matrix.hpp"
#include "opkit/opcore.hpp"
#include "opkit/operator.hpp"
#include "opkit/poly.hpp"

#include <optional>
#include <string>
#include <vector>

namespace opkit {

struct GJMSCoefficients {
    unsigned n = 0;
    unsigned k = 0;
    std::vector<Rational> c;  // c_1..c_k
    std::vector<Rational> b;  // b_1..b_k
};

// c_i = (n+2i-2)(n-2i) / (4n(n-1)),  b_i = i(1-i) / (n(n-1)).
inline GJMSCoefficients gjms_coefficients(unsigned n, unsigned k) {
    if (n < 3) throw InputError("GJMS operators need n >= 3");
    if (k < 1) throw InputError("GJMS order parameter k must be at least 1");
    GJMSCoefficients out{n, k, {}, {}};
    const long nn = n;
    for (long i = 1; i <= static_cast<long>(k); ++i) {
        Rational c((nn + 2 * i - 2) * (nn - 2 * i), 4 * nn * (nn - 1));
        c.canonicalize();
        Rational b(i * (1 - i), nn * (nn - 1));
        b.canonicalize();
        out.c.push_back(c);
        out.b.push_back(b);
    }
    for (std::size_t i = 0; i < k; ++i)
        if (out.b[i] != out.c[i] - out.c[0]) throw MathError("GJMS coefficient identity b_i = c_i - c_1 failed");
    return out;
}

template <class F>
struct GJMSSpec {
    GJMSCoefficients coeffs;
    F sc;  // constant scalar curvature
};

template <class F>
struct SpectralModel {
    unsigned n = 0;
    std::vector<typename OperatorHandle<F>::DiagonalEntry> entries;  // Laplacian eigenvalue, multiplicity
    std::optional<std::string> preset;

    std::size_t dim() const {
        std::size_t d = 0;
        for (const auto& e : entries) d += e.multiplicity;
        return d;
    }
};

inline std::size_t binomial(std::size_t a, std::size_t b) {
    if (b > a) return 0;
    std::size_t r = 1;
    for (std::size_t i = 1; i <= b; ++i) r = r * (a - b + i) / i;
    return r;
}

// Laplacian eigenvalues l(l+n-1) on the round unit S^n, l = 0..l_max, with the
// dimensions of the spherical harmonic spaces as multiplicities. Sc = n(n-1).
template <class F>
SpectralModel<F> unit_sphere_model(unsigned n, unsigned l_max) {
    if (n < 3) throw InputError("GJMS operators need n >= 3");
    SpectralModel<F> m;
    m.n = n;
    m.preset = "unit-sphere";
    for (std::size_t l = 0; l <= l_max; ++l) {
        const std::size_t mult = binomial(l + n, n) - binomial(l + n >= 2 ? l + n - 2 : 0, n);
        m.entries.push_back({from_int<F>(static_cast<long>(l * (l + n - 1))), mult});
    }
    return m;
}

template <class F>
F unit_sphere_curvature(unsigned n) {
    return from_int<F>(static_cast<long>(n) * (static_cast<long>(n) - 1));
}

template <class F>
struct GJMSOperator {
    OperatorHandle<F> laplacian;
    OperatorHandle<F> y;   // conformal Laplacian
    OperatorHandle<F> pk;  // diagonal values of P_k
    FactoredPoly<F> in_y;  // prod (Y + b_i Sc): roots lambda_i = b_i Sc (merged when Sc = 0)
    double form_mismatch = 0.0;  // largest entrywise gap between the two product forms
};

namespace detail {

template <class F>
bool scalar_near(const F& a, const F& b, double tol) {
    if constexpr (is_exact_v<F>) {
        (void)tol;
        return a == b;
    } else {
        return magnitude(a - b) <= tol * std::max({1.0, magnitude(a), magnitude(b)});
    }
}

}  // namespace detail

template <class F>
GJMSOperator<F> gjms_operator(const GJMSSpec<F>& spec, const SpectralModel<F>& model, double check_tol = kDefaultFloatCheck) {
    if (model.entries.empty()) throw InputError("spectral model has no entries");
    if (model.n != 0 && model.n != spec.coeffs.n) throw InputError("spectral model dimension differs from n");
    const auto& co = spec.coeffs;
    GJMSOperator<F> out;
    out.laplacian = OperatorHandle<F>::diagonal(model.entries);
    const F shift = from_rational<F>(co.c[0]) * spec.sc;
    std::vector<typename OperatorHandle<F>::DiagonalEntry> ye, pe;
    for (const auto& e : model.entries) {
        const F y = e.eigenvalue + shift;
        F by_delta = from_int<F>(1), by_y = from_int<F>(1);
        for (unsigned i = 0; i < co.k; ++i) {
            by_delta *= e.eigenvalue + from_rational<F>(co.c[i]) * spec.sc;
            by_y *= y + from_rational<F>(co.b[i]) * spec.sc;
        }
        if (!detail::scalar_near(by_delta, by_y, check_tol))
            throw MathError("GJMS product forms disagree at Laplacian eigenvalue " + to_string(e.eigenvalue));
        out.form_mismatch = std::max(out.form_mismatch, magnitude(by_delta - by_y));
        ye.push_back({y, e.multiplicity});
        pe.push_back({by_y, e.multiplicity});
    }
    out.y = OperatorHandle<F>::diagonal(std::move(ye));
    out.pk = OperatorHandle<F>::diagonal(std::move(pe));
    out.in_y.leading = from_int<F>(1);
    if (is_zero(spec.sc, 0.0)) {
        out.in_y.factors.push_back({from_int<F>(0), co.k});
    } else {
        for (unsigned i = 0; i < co.k; ++i) out.in_y.factors.push_back({from_rational<F>(co.b[i]) * spec.sc, 1});
    }
    return out;
}

struct GJMSNullComponent {
    unsigned index = 0;                // i in 1..k (0 for the Sc = 0 single component)
    std::string y_eigenvalue;          // -b_i Sc
    std::vector<std::size_t> entries;  // model entry indices with that Y-eigenvalue
    std::size_t dimension = 0;
};

struct GJMSNullReport {
    std::vector<GJMSNullComponent> components;
    std::size_t total_dimension = 0;
    std::size_t direct_dimension = 0;  // zeros of the diagonal P_k
    bool consistent = false;
    bool flat = false;  // Sc = 0: N(P_k) = N(Y^k) = N(Y) on diagonal models
};

template <class F>
GJMSNullReport gjms_nullspace(const GJMSSpec<F>& spec, const SpectralModel<F>& model, const Tolerance& tol = {}) {
    const auto op = gjms_operator(spec, model);
    GJMSNullReport rep;
    const auto& ye = op.y.entries();
    const double zt = is_exact_v<F> ? 0.0 : tol.eps * 1e4 * std::max(1.0, magnitude(spec.sc));
    rep.flat = is_zero(spec.sc, 0.0);
    for (std::size_t i = 0; i < op.in_y.factors.size(); ++i) {
        const F target = -op.in_y.factors[i].lambda;
        GJMSNullComponent c;
        c.index = rep.flat ? 0 : static_cast<unsigned>(i + 1);
        c.y_eigenvalue = to_string(target);
        for (std::size_t e = 0; e < ye.size(); ++e)
            if (is_zero(ye[e].eigenvalue - target, zt)) {
                c.entries.push_back(e);
                c.dimension += ye[e].multiplicity;
            }
        rep.total_dimension += c.dimension;
        rep.components.push_back(std::move(c));
    }
    double scale = 1.0;
    for (const auto& e : op.pk.entries()) scale = std::max(scale, magnitude(e.eigenvalue));
    for (const auto& e : op.pk.entries())
        if (is_zero(e.eigenvalue, is_exact_v<F> ? 0.0 : tol.eps * 1e4 * scale)) rep.direct_dimension += e.multiplicity;
    rep.consistent = rep.total_dimension == rep.direct_dimension;
    return rep;
}

template <class F>
struct GJMSSolveReport {
    SolveReport<F> solve;                     // components u_1..u_k and u
    std::vector<F> cofactors;                 // Q_i, constants for simple roots
    std::vector<F> printed_coefficients;      // the closed reconstruction formula with b_i = i(i-1)/(n(n-1))
    bool printed_matches = false;             // printed == cofactors
    bool printed_matches_up_to_sign = false;  // printed * (-1)^{k-1} == cofactors
    double printed_residual = 0.0;            // |P_k u' - f| / max(|f|, 1) for u' from the printed formula
    double direct_error = 0.0;                // |u - P_k^{-1} f| where P_k is invertible, else 0
};

// (n(n-1)/Sc)^{k-1} prod_{j != i} 1 / ((j-i)(j+i-1))
template <class F>
std::vector<F> gjms_printed_coefficients(const GJMSSpec<F>& spec) {
    const auto& co = spec.coeffs;
    const F base = from_int<F>(static_cast<long>(co.n) * (static_cast<long>(co.n) - 1)) / spec.sc;
    std::vector<F> out;
    for (long i = 1; i <= static_cast<long>(co.k); ++i) {
        F a = from_int<F>(1);
        for (unsigned t = 1; t < co.k; ++t) a *= base;
        for (long j = 1; j <= static_cast<long>(co.k); ++j)
            if (j != i) a /= from_int<F>((j - i) * (j + i - 1));
        out.push_back(a);
    }
    return out;
}

template <class F>
GJMSSolveReport<F> gjms_solve(const GJMSSpec<F>& spec, const SpectralModel<F>& model, const Vec<F>& f,
                              double check_tol = kDefaultFloatCheck) {
    if (is_zero(spec.sc, 0.0)) throw InputError("gjms_solve needs Sc != 0");
    const auto op = gjms_operator(spec, model, check_tol);
    const std::size_t n = op.y.dim();
    if (f.size() != n) throw InputError("f has " + std::to_string(f.size()) + " entries, the model has dimension " +
                                        std::to_string(n));
    const auto& yv = op.y.diagonal_vector();
    double fscale = 1.0;
    for (const auto& x : yv) fscale = std::max(fscale, magnitude(x));
    const double zt = is_exact_v<F> ? 0.0 : 1e-12 * fscale;
    std::vector<Vec<F>> tuple;
    for (unsigned i = 0; i < spec.coeffs.k; ++i) {
        const F shift = op.in_y.factors[i].lambda;
        Vec<F> ui = zeros<F>(n);
        for (std::size_t c = 0; c < n; ++c) {
            const F denom = yv[c] + shift;
            if (is_zero(denom, zt)) {
                if (!is_zero(f[c], zt * std::max(1.0, norm2(f))))
                    throw MathError("factor " + std::to_string(i + 1) +
                                    " (Y + b_i Sc) is singular where f is nonzero, at coordinate " + std::to_string(c));
                continue;
            }
            ui[c] = f[c] / denom;
        }
        tuple.push_back(std::move(ui));
    }
    const auto dec = build_decomposition(op.y, op.in_y, Tolerance{}, check_tol);
    GJMSSolveReport<F> rep;
    rep.solve = solve_backward(dec, tuple, f);
    for (const auto& q : dec.certificate().cofactors) rep.cofactors.push_back(q.coeff(0));
    rep.printed_coefficients = gjms_printed_coefficients(spec);
    const F sign = from_int<F>(spec.coeffs.k % 2 == 1 ? 1 : -1);
    rep.printed_matches = true;
    rep.printed_matches_up_to_sign = true;
    for (std::size_t i = 0; i < rep.cofactors.size(); ++i) {
        rep.printed_matches = rep.printed_matches && detail::scalar_near(rep.printed_coefficients[i], rep.cofactors[i], check_tol);
        rep.printed_matches_up_to_sign =
            rep.printed_matches_up_to_sign &&
            detail::scalar_near(F(rep.printed_coefficients[i] * sign), rep.cofactors[i], check_tol);
    }
    Vec<F> printed_u = zeros<F>(n);
    for (std::size_t i = 0; i < tuple.size(); ++i) axpy(printed_u, rep.printed_coefficients[i], tuple[i]);
    rep.printed_residual = relative_residual(op.pk(printed_u), f);
    // Direct division oracle where P_k is invertible.
    const auto& pv = op.pk.diagonal_vector();
    bool invertible = true;
    for (const auto& x : pv) invertible = invertible && !is_zero(x, zt);
    if (invertible) {
        Vec<F> direct(n);
        for (std::size_t c = 0; c < n; ++c) direct[c] = f[c] / pv[c];
        rep.direct_error = norm2(direct - rep.solve.reconstruction) / std::max(1.0, norm2(direct));
    }
    return rep;
}

struct GJMSEigenComponent {
    std::string y_root;                // root of (P_k - mu)[Y]
    unsigned multiplicity = 0;         // as a root of the Y-polynomial
    std::vector<std::size_t> entries;  // model entries with that Y-eigenvalue
    std::size_t dimension = 0;
};

struct GJMSEigenReport {
    std::vector<GJMSEigenComponent> components;
    std::size_t total_dimension = 0;
    std::size_t direct_dimension = 0;  // entries with P_k = mu
    bool consistent = false;
    // Diagonal models: each generalized Y-eigenspace is a true eigenspace.
    bool diagonal_model = true;
};

// Decomposes the mu-eigenspace of P_k into Y-eigenspaces at the roots of the
// Y-polynomial P_k - mu that the model realizes.
template <class F>
GJMSEigenReport gjms_eigenstructure(const GJMSSpec<F>& spec, const SpectralModel<F>& model, const F& mu,
                                    double cluster_tol = 1e-6) {
    const auto op = gjms_operator(spec, model);
    const DensePoly<F> q = op.in_y.expand() - DensePoly<F>::constant(mu);
    if (q.degree() < 1) throw MathError("P_k - mu is constant");
    std::vector<std::pair<F, unsigned>> roots;
    if constexpr (is_exact_v<F>) {
        // Exact multiplicities at the model's Y-eigenvalues; the other roots
        // (possibly irrational) do not meet the model.
        for (const auto& e : op.y.entries()) {
            unsigned m = 0;
            DensePoly<F> r = q;
            while (r.degree() >= 1 && is_zero(r(e.eigenvalue), 0.0)) {
                r = divmod(r, DensePoly<F>::linear(-e.eigenvalue)).first;
                ++m;
            }
            if (m > 0) roots.emplace_back(e.eigenvalue, m);
        }
    } else {
        std::vector<Complex> c;
        for (const auto& x : q.coeffs()) c.emplace_back(x, 0.0);
        const auto fac = factor_numeric(DensePoly<Complex>(c), cluster_tol);
        for (const auto& f : fac.factors)
            if (f.lambda.imag() == 0.0) roots.emplace_back(-f.lambda.real(), f.multiplicity);
    }
    GJMSEigenReport rep;
    const auto& ye = op.y.entries();
    double scale = 1.0;
    for (const auto& e : ye) scale = std::max(scale, magnitude(e.eigenvalue));
    const double match = is_exact_v<F> ? 0.0 : cluster_tol * scale;
    for (const auto& [root, mult] : roots) {
        GJMSEigenComponent c{to_string(root), mult, {}, 0};
        for (std::size_t e = 0; e < ye.size(); ++e)
            if (is_zero(ye[e].eigenvalue - root, match)) {
                c.entries.push_back(e);
                c.dimension += ye[e].multiplicity;
            }
        if (c.dimension == 0) continue;
        rep.total_dimension += c.dimension;
        rep.components.push_back(std::move(c));
    }
    double pscale = std::max(1.0, magnitude(mu));
    for (const auto& e : op.pk.entries()) pscale = std::max(pscale, magnitude(e.eigenvalue));
    for (const auto& e : op.pk.entries())
        if (is_zero(e.eigenvalue - mu, is_exact_v<F> ? 0.0 : 1e-10 * pscale)) rep.direct_dimension += e.multiplicity;
    rep.consistent = rep.total_dimension == rep.direct_dimension;
    return rep;
}

}  // namespace opkit
