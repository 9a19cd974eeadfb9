#pragma once

// Multivariate polynomials over Q, Buchberger with cofactor tracking, unit
// ideal certificates and the dual-to-alpha cofactor induction.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"
#include "opkit/poly.hpp"
#include "opkit/posets.hpp"

#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace opkit {

using Exponent = std::vector<unsigned>;

// Graded reverse lexicographic order: a < b.
struct Grevlex {
    bool operator()(const Exponent& a, const Exponent& b) const;
};

class MultiPoly {
public:
    using Terms = std::map<Exponent, Rational, Grevlex>;

    MultiPoly() = default;
    explicit MultiPoly(unsigned nvars) : nvars_(nvars) {}

    static MultiPoly constant(unsigned nvars, const Rational& c);
    static MultiPoly variable(unsigned nvars, unsigned index);
    static MultiPoly monomial(const Exponent& e, const Rational& c);
    // Univariate embedding into nvars variables, in variable `index`.
    static MultiPoly from_dense(const DensePoly<Rational>& p, unsigned nvars = 1, unsigned index = 0);

    unsigned nvars() const { return nvars_; }
    const Terms& terms() const { return terms_; }
    std::size_t term_count() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const;
    bool is_one() const;
    unsigned total_degree() const;

    // Leading term under grevlex; undefined on the zero polynomial.
    const Exponent& leading_exponent() const { return terms_.rbegin()->first; }
    const Rational& leading_coefficient() const { return terms_.rbegin()->second; }

    void add_term(const Exponent& e, const Rational& c);

    MultiPoly& operator+=(const MultiPoly& o);
    MultiPoly& operator-=(const MultiPoly& o);
    MultiPoly& operator*=(const Rational& s);
    // this += c * x^e * o
    void add_scaled_shifted(const MultiPoly& o, const Rational& c, const Exponent& e);

    friend MultiPoly operator+(MultiPoly a, const MultiPoly& b) { return a += b; }
    friend MultiPoly operator-(MultiPoly a, const MultiPoly& b) { return a -= b; }
    friend MultiPoly operator*(MultiPoly a, const Rational& s) { return a *= s; }
    friend MultiPoly operator-(MultiPoly a) { return a *= Rational(-1); }
    friend MultiPoly operator*(const MultiPoly& a, const MultiPoly& b);
    friend bool operator==(const MultiPoly& a, const MultiPoly& b) {
        return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
    }
    friend bool operator!=(const MultiPoly& a, const MultiPoly& b) { return !(a == b); }

    MultiPoly monic() const;
    Rational eval(const std::vector<Rational>& point) const;
    std::complex<double> eval(const std::vector<std::complex<double>>& point) const;
    // Only valid when nvars == 1.
    DensePoly<Rational> to_dense() const;

    std::string to_string() const;

private:
    unsigned nvars_ = 1;
    Terms terms_;
};

MultiPoly product(const std::vector<MultiPoly>& factors, unsigned nvars);

// 10^6 unless the OPKIT_BUDGET environment variable holds a positive integer.
std::size_t default_term_budget();

struct GroebnerOptions {
    // Upper bound on live terms (basis plus transform).
    std::size_t term_budget = default_term_budget();
};

struct GroebnerResult {
    std::vector<MultiPoly> basis;                   // reduced, monic, sorted by leading term
    std::vector<std::vector<MultiPoly>> transform;  // basis[r] = Σ_c transform[r][c] * gens[c]
};

GroebnerResult groebner(const std::vector<MultiPoly>& gens, const GroebnerOptions& opts = {});

// Normal form of f with respect to a Groebner basis.
MultiPoly normal_form(const MultiPoly& f, const std::vector<MultiPoly>& basis);

enum class IdealStatus { Unit, NotUnit };

struct IdealCertificate {
    std::vector<MultiPoly> generators;
    std::vector<MultiPoly> cofactors;  // empty unless Unit
    IdealStatus status = IdealStatus::NotUnit;

    bool is_unit() const { return status == IdealStatus::Unit; }
};

// Σ cofactors[i] * generators[i]; equals 1 for a sound unit certificate.
MultiPoly certificate_sum(const IdealCertificate& cert);
bool certificate_verifies(const IdealCertificate& cert);

IdealCertificate unit_certificate(const std::vector<MultiPoly>& gens, const GroebnerOptions& opts = {});

// P_J = Π_{j ∈ J} P_j and P^I = Π_{j ∉ I} P_j.
MultiPoly subset_product(const std::vector<MultiPoly>& factors, Mask j);
MultiPoly complement_product(const std::vector<MultiPoly>& factors, Mask i);

using CofactorMap = std::map<Mask, MultiPoly>;
using CertificateMap = std::map<Mask, IdealCertificate>;

// From unit certificates 1 = Σ_{j∈J} Q_{J,j} P_j for J ∈ α^u, builds Q_I with
// Σ_{I∈α} Q_I P^I = 1 by induction over the inclusion order of α^u. α is
// closed downward first. Certificates for J are indexed by J's elements in
// increasing order. Only certificates reachable from L are required.
CofactorMap dual_to_alpha(const std::vector<MultiPoly>& factors, const AlphaSystem& alpha,
                          const CertificateMap& beta_certs);

// Σ_I Q_I P^I - 1.
MultiPoly alpha_identity_defect(const std::vector<MultiPoly>& factors, const CofactorMap& q);

// Folds cofactors onto Max(α): Q'_{I'} += Q_I P_{I' \ I} for a chosen maximal I' ⊇ I.
CofactorMap reduce_to_maximal(const std::vector<MultiPoly>& factors, const AlphaSystem& alpha, const CofactorMap& q);

struct BetaReport {
    CertificateMap certificates;
    bool all_unit = true;
};

BetaReport certify_beta_decomposition(const std::vector<MultiPoly>& factors, const AlphaSystem& beta,
                                      const GroebnerOptions& opts = {});

// Generators {P_j : j ∈ J} in increasing index order.
std::vector<MultiPoly> select_generators(const std::vector<MultiPoly>& factors, Mask j);

}  // namespace opkit
