#pragma once

// Univariate polynomials and partition-of-unity certificates.
//
// Sign convention: a FactoredPoly stores lambda_i for the factor (x + lambda_i),
// so the corresponding root (generalized eigenvalue of an operator D when the
// polynomial is applied to D) is -lambda_i.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"

#include <algorithm>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace opkit {

template <class F>
class DensePoly {
public:
    DensePoly() = default;
    explicit DensePoly(std::vector<F> coeffs) : c_(std::move(coeffs)) { trim(); }

    static DensePoly constant(const F& a) { return DensePoly(std::vector<F>{a}); }
    static DensePoly one() { return constant(from_int<F>(1)); }
    // x + a
    static DensePoly linear(const F& a) { return DensePoly(std::vector<F>{a, from_int<F>(1)}); }
    static DensePoly monomial(std::size_t degree, const F& a = from_int<F>(1)) {
        std::vector<F> c(degree + 1, from_int<F>(0));
        c[degree] = a;
        return DensePoly(std::move(c));
    }

    const std::vector<F>& coeffs() const { return c_; }
    bool is_zero_poly() const { return c_.empty(); }
    // -1 for the zero polynomial.
    long degree() const { return static_cast<long>(c_.size()) - 1; }
    const F& leading() const { return c_.back(); }
    F coeff(std::size_t k) const { return k < c_.size() ? c_[k] : from_int<F>(0); }

    F operator()(const F& x) const {
        F acc = from_int<F>(0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }

    DensePoly& operator+=(const DensePoly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), from_int<F>(0));
        for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
        trim();
        return *this;
    }
    DensePoly& operator-=(const DensePoly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), from_int<F>(0));
        for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
        trim();
        return *this;
    }
    DensePoly& operator*=(const F& s) {
        for (auto& x : c_) x *= s;
        trim();
        return *this;
    }

    friend DensePoly operator+(DensePoly a, const DensePoly& b) { return a += b; }
    friend DensePoly operator-(DensePoly a, const DensePoly& b) { return a -= b; }
    friend DensePoly operator*(DensePoly a, const F& s) { return a *= s; }
    friend DensePoly operator-(DensePoly a) { return a *= from_int<F>(-1); }
    friend DensePoly operator*(const DensePoly& a, const DensePoly& b) {
        if (a.c_.empty() || b.c_.empty()) return {};
        std::vector<F> c(a.c_.size() + b.c_.size() - 1, from_int<F>(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) c[i + j] += a.c_[i] * b.c_[j];
        return DensePoly(std::move(c));
    }
    friend bool operator==(const DensePoly& a, const DensePoly& b) { return a.c_ == b.c_; }
    friend bool operator!=(const DensePoly& a, const DensePoly& b) { return !(a == b); }

    DensePoly pow(unsigned p) const {
        DensePoly out = one();
        for (unsigned k = 0; k < p; ++k) out = out * *this;
        return out;
    }

    DensePoly monic() const {
        if (c_.empty()) return {};
        return *this * (from_int<F>(1) / leading());
    }

    // Largest coefficient magnitude; used to scale float comparisons.
    double max_abs() const {
        double m = 0.0;
        for (const auto& x : c_) m = std::max(m, magnitude(x));
        return m;
    }

private:
    void trim() {
        while (!c_.empty() && is_zero(c_.back())) c_.pop_back();
    }

    std::vector<F> c_;
};

// Quotient and remainder of a / b.
template <class F>
std::pair<DensePoly<F>, DensePoly<F>> divmod(const DensePoly<F>& a, const DensePoly<F>& b) {
    if (b.is_zero_poly()) throw MathError("polynomial division by zero");
    if (a.degree() < b.degree()) return {DensePoly<F>{}, a};
    std::vector<F> r = a.coeffs();
    std::vector<F> q(static_cast<std::size_t>(a.degree() - b.degree() + 1), from_int<F>(0));
    const F inv = from_int<F>(1) / b.leading();
    const auto db = static_cast<std::size_t>(b.degree());
    for (std::size_t k = q.size(); k-- > 0;) {
        const F t = r[k + db] * inv;
        q[k] = t;
        for (std::size_t j = 0; j <= db; ++j) r[k + j] -= t * b.coeffs()[j];
    }
    r.resize(db);
    return {DensePoly<F>(std::move(q)), DensePoly<F>(std::move(r))};
}

template <class F>
DensePoly<F> operator%(const DensePoly<F>& a, const DensePoly<F>& b) {
    return divmod(a, b).second;
}

// Coefficient-wise test that two polynomials agree (exactly for exact fields,
// within eps relative to the largest coefficient otherwise).
template <class F>
bool poly_near(const DensePoly<F>& a, const DensePoly<F>& b, const Tolerance& tol = {}) {
    if constexpr (is_exact_v<F>) {
        return a == b;
    } else {
        const double scale = std::max({1.0, a.max_abs(), b.max_abs()});
        const DensePoly<F> d = a - b;
        for (const auto& x : d.coeffs())
            if (magnitude(x) > tol.eps * scale) return false;
        return true;
    }
}

// ---- extended Euclid -----------------------------------------------------

template <class F>
struct GcdResult {
    DensePoly<F> g;  // monic gcd
    DensePoly<F> s;  // s*a + t*b == g
    DensePoly<F> t;
};

template <class F>
GcdResult<F> ext_gcd(const DensePoly<F>& a, const DensePoly<F>& b) {
    if constexpr (!is_exact_v<F>) {
        throw InputError("ext_gcd requires an exact field; use partition_of_unity in float mode");
    } else {
        if (a.is_zero_poly() && b.is_zero_poly()) throw InputError("ext_gcd: both inputs are zero");
        DensePoly<F> r0 = a, r1 = b;
        DensePoly<F> s0 = DensePoly<F>::one(), s1;
        DensePoly<F> t0, t1 = DensePoly<F>::one();
        while (!r1.is_zero_poly()) {
            auto [q, r] = divmod(r0, r1);
            DensePoly<F> s2 = s0 - q * s1;
            DensePoly<F> t2 = t0 - q * t1;
            r0 = std::move(r1);
            r1 = std::move(r);
            s0 = std::move(s1);
            s1 = std::move(s2);
            t0 = std::move(t1);
            t1 = std::move(t2);
        }
        const F inv = from_int<F>(1) / r0.leading();
        return {r0 * inv, s0 * inv, t0 * inv};
    }
}

// ---- factored polynomials ------------------------------------------------

template <class F>
struct Factor {
    F lambda;           // factor is (x + lambda)^multiplicity
    unsigned multiplicity = 1;
};

template <class F>
struct FactoredPoly {
    F leading = from_int<F>(1);
    std::vector<Factor<F>> factors;

    std::size_t ell() const { return factors.empty() ? 0 : factors.size() - 1; }

    unsigned degree() const {
        unsigned d = 0;
        for (const auto& f : factors) d += f.multiplicity;
        return d;
    }

    // (x + lambda_i)^{p_i}
    DensePoly<F> factor_poly(std::size_t i) const {
        return DensePoly<F>::linear(factors.at(i).lambda).pow(factors.at(i).multiplicity);
    }

    // Product of all factors except i (the leading coefficient is not included).
    DensePoly<F> complement(std::size_t i) const {
        DensePoly<F> out = DensePoly<F>::one();
        for (std::size_t j = 0; j < factors.size(); ++j)
            if (j != i) out = out * factor_poly(j);
        return out;
    }

    DensePoly<F> monic_expand() const { return complement(factors.size()); }
    DensePoly<F> expand() const { return monic_expand() * leading; }
};

// Rejects empty factor lists, zero multiplicities, zero leading coefficient and
// coincident (or, in float mode, epsilon-close) roots.
template <class F>
void validate(const FactoredPoly<F>& P, const Tolerance& tol = {}) {
    if (P.factors.empty()) throw InputError("factored polynomial has no factors");
    if (is_zero(P.leading)) throw InputError("factored polynomial has zero leading coefficient");
    for (const auto& f : P.factors)
        if (f.multiplicity == 0) throw InputError("factor multiplicity must be positive");
    for (std::size_t i = 0; i < P.factors.size(); ++i)
        for (std::size_t j = i + 1; j < P.factors.size(); ++j) {
            const F d = P.factors[i].lambda - P.factors[j].lambda;
            if constexpr (is_exact_v<F>) {
                if (is_zero(d))
                    throw InputError("duplicate root: lambda_" + std::to_string(i) + " = lambda_" + std::to_string(j));
            } else {
                const double scale = std::max({1.0, magnitude(P.factors[i].lambda), magnitude(P.factors[j].lambda)});
                if (magnitude(d) <= tol.eps * scale)
                    throw MathError("ill-conditioned root cluster: lambda_" + std::to_string(i) + " and lambda_" +
                                    std::to_string(j));
            }
        }
}

// ---- nilpotent inverse series -------------------------------------------

// Inverse of (x + mu) modulo (x + lambda)^p, expanded in powers of x:
//   (mu - lambda)^{-1} * sum_{s<p} (x + lambda)^s / (lambda - mu)^s
template <class F>
DensePoly<F> nilpotent_inverse_series(const F& mu, const F& lambda, unsigned p) {
    if (p == 0) throw InputError("nilpotent_inverse_series: p must be positive");
    const F diff = mu - lambda;
    if (is_zero(diff)) throw MathError("series pole: roots coincide");
    const F ratio = from_int<F>(1) / (lambda - mu);
    const DensePoly<F> shift = DensePoly<F>::linear(lambda);
    DensePoly<F> term = DensePoly<F>::one();
    DensePoly<F> sum;
    for (unsigned s = 0; s < p; ++s) {
        sum += term;
        term = term * shift * ratio;
    }
    return sum * (from_int<F>(1) / diff);
}

// ---- partition of unity --------------------------------------------------

enum class CertificateMode { Full, GroupedReal };

template <class F>
struct UnityCertificate {
    FactoredPoly<F> source;
    std::vector<DensePoly<F>> cofactors;    // Q_i (or Q_{m mbar} for grouped pairs)
    std::vector<DensePoly<F>> complements;  // P^i, matching cofactors
    // Factor indices covered by each cofactor: {i} in full mode, {m, mbar}
    // for a grouped conjugate pair.
    std::vector<std::vector<std::size_t>> groups;
    CertificateMode mode = CertificateMode::Full;
};

enum class CofactorRoute {
    Auto,        // closed form when every multiplicity is 1, normalized series otherwise
    Normalized,  // always the truncated-series construction
    ClosedForm,  // simple roots only
};

namespace detail {

// Truncated power series in t, length p (coefficients of t^0..t^{p-1}).
template <class F>
std::vector<F> series_mul(const std::vector<F>& a, const std::vector<F>& b, std::size_t p) {
    std::vector<F> c(p, from_int<F>(0));
    for (std::size_t i = 0; i < std::min(p, a.size()); ++i) {
        if (is_zero(a[i])) continue;
        for (std::size_t j = 0; i + j < p && j < b.size(); ++j) c[i + j] += a[i] * b[j];
    }
    return c;
}

// sum_s a_s (x + lambda)^s as a polynomial in x.
template <class F>
DensePoly<F> from_shifted_basis(const std::vector<F>& a, const F& lambda) {
    DensePoly<F> out;
    const DensePoly<F> shift = DensePoly<F>::linear(lambda);
    for (auto it = a.rbegin(); it != a.rend(); ++it) out = out * shift + DensePoly<F>::constant(*it);
    return out;
}

}  // namespace detail

// Coefficients (in powers of t = x + lambda_i) of the normalized cofactor
//   N( prod_{j != i} (x + lambda_j)^{-p_j} )  truncated to t^{p_i - 1}.
// The constant term is prod_{j != i} (lambda_j - lambda_i)^{-p_j}.
template <class F>
std::vector<F> normalized_cofactor_series(const FactoredPoly<F>& P, std::size_t i) {
    const std::size_t p = P.factors[i].multiplicity;
    const F& li = P.factors[i].lambda;
    std::vector<F> acc(p, from_int<F>(0));
    acc[0] = from_int<F>(1);
    for (std::size_t j = 0; j < P.factors.size(); ++j) {
        if (j == i) continue;
        // (x + lambda_j) = t + d, inverse mod t^p is d^{-1} sum_s (-t/d)^s
        const F d = P.factors[j].lambda - li;
        if (is_zero(d)) throw InputError("duplicate root in cofactor construction");
        std::vector<F> inv(p, from_int<F>(0));
        const F dinv = from_int<F>(1) / d;
        F coeff = dinv;
        for (std::size_t s = 0; s < p; ++s) {
            inv[s] = coeff;
            coeff = -(coeff * dinv);
        }
        for (unsigned r = 0; r < P.factors[j].multiplicity; ++r) acc = detail::series_mul(acc, inv, p);
    }
    return acc;
}

template <class F>
DensePoly<F> normalized_cofactor(const FactoredPoly<F>& P, std::size_t i) {
    return detail::from_shifted_basis(normalized_cofactor_series(P, i), P.factors[i].lambda);
}

// Simple roots: Q_i = prod_{j != i} 1 / (lambda_j - lambda_i).
template <class F>
F simple_root_cofactor(const FactoredPoly<F>& P, std::size_t i) {
    F q = from_int<F>(1);
    for (std::size_t j = 0; j < P.factors.size(); ++j)
        if (j != i) q /= (P.factors[j].lambda - P.factors[i].lambda);
    return q;
}

template <class F>
UnityCertificate<F> partition_of_unity(const FactoredPoly<F>& P, const Tolerance& tol = {},
                                       CofactorRoute route = CofactorRoute::Auto) {
    validate(P, tol);
    const bool simple = std::all_of(P.factors.begin(), P.factors.end(),
                                    [](const Factor<F>& f) { return f.multiplicity == 1; });
    if (route == CofactorRoute::ClosedForm && !simple)
        throw InputError("closed-form cofactors need every multiplicity equal to 1");
    const bool closed = route == CofactorRoute::ClosedForm || (route == CofactorRoute::Auto && simple);

    UnityCertificate<F> cert;
    cert.source = P;
    cert.mode = CertificateMode::Full;
    for (std::size_t i = 0; i < P.factors.size(); ++i) {
        if (P.factors.size() == 1)
            cert.cofactors.push_back(DensePoly<F>::one());
        else if (closed)
            cert.cofactors.push_back(DensePoly<F>::constant(simple_root_cofactor(P, i)));
        else
            cert.cofactors.push_back(normalized_cofactor(P, i));
        cert.complements.push_back(P.complement(i));
        cert.groups.push_back({i});
    }
    return cert;
}

// sum_i Q_i P^i - 1; the zero polynomial for a sound certificate.
template <class F>
DensePoly<F> unity_defect(const UnityCertificate<F>& cert) {
    DensePoly<F> sum;
    for (std::size_t i = 0; i < cert.cofactors.size(); ++i) sum += cert.cofactors[i] * cert.complements[i];
    return sum - DensePoly<F>::one();
}

template <class F>
bool certificate_holds(const UnityCertificate<F>& cert, const Tolerance& tol = {}) {
    if constexpr (is_exact_v<F>) {
        return unity_defect(cert).is_zero_poly();
    } else {
        DensePoly<F> sum;
        for (std::size_t i = 0; i < cert.cofactors.size(); ++i) sum += cert.cofactors[i] * cert.complements[i];
        return poly_near(sum, DensePoly<F>::one(), tol);
    }
}

// Conjugate pairs of Q(i) roots are combined into real cofactors against
// P / ((x + kappa)(x + conj kappa))^p.
UnityCertificate<GaussRational> real_partition(const FactoredPoly<GaussRational>& P);

// Roots of a float polynomial through companion-matrix eigenvalues; roots
// closer than cluster_tol are merged with summed multiplicity.
FactoredPoly<Complex> factor_numeric(const DensePoly<Complex>& p, double cluster_tol = 1e-6,
                                     double residual_bound = 1e-8);

// Exact factorization into linear factors over Q. Candidates come from a float
// root finder and are confirmed by exact division; throws MathError when the
// polynomial does not split over Q.
FactoredPoly<Rational> factor_exact(const DensePoly<Rational>& p);

// Characteristic polynomial det(x I - A) of a rational matrix (Faddeev-LeVerrier).
template <class F>
class Matrix;
DensePoly<Rational> characteristic_polynomial(const Matrix<Rational>& a);

}  // namespace opkit
