#include "opkit/poly.hpp"

#include "opkit/matrix.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

namespace opkit {

UnityCertificate<GaussRational> real_partition(const FactoredPoly<GaussRational>& P) {
    validate(P);
    const std::size_t m = P.factors.size();
    std::vector<long> partner(m, -1);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& f = P.factors[i];
        if (f.lambda.is_real()) continue;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i && P.factors[j].lambda == f.lambda.conj()) {
                if (P.factors[j].multiplicity != f.multiplicity)
                    throw InputError("conjugate roots with different multiplicities");
                partner[i] = static_cast<long>(j);
            }
        if (partner[i] < 0) throw InputError("root set not conjugate-closed: " + to_string(f.lambda) + " has no conjugate");
    }

    const auto full = partition_of_unity(P);
    UnityCertificate<GaussRational> out;
    out.source = P;
    out.mode = CertificateMode::GroupedReal;

    auto require_real = [](const DensePoly<GaussRational>& q) {
        for (const auto& c : q.coeffs())
            if (!c.is_real()) throw MathError("grouped cofactor has a nonzero imaginary part");
    };

    for (std::size_t i = 0; i < m; ++i) {
        const auto& f = P.factors[i];
        if (f.lambda.is_real()) {
            require_real(full.cofactors[i]);
            out.cofactors.push_back(full.cofactors[i]);
            out.complements.push_back(full.complements[i]);
            out.groups.push_back({i});
            continue;
        }
        // Each pair is emitted once, from the member with positive imaginary part.
        if (sgn(f.lambda.im()) < 0) continue;
        const auto j = static_cast<std::size_t>(partner[i]);
        DensePoly<GaussRational> q = full.cofactors[i] * P.factor_poly(j) + full.cofactors[j] * P.factor_poly(i);
        require_real(q);
        DensePoly<GaussRational> comp = DensePoly<GaussRational>::one();
        for (std::size_t r = 0; r < m; ++r)
            if (r != i && r != j) comp = comp * P.factor_poly(r);
        require_real(comp);
        out.cofactors.push_back(std::move(q));
        out.complements.push_back(std::move(comp));
        out.groups.push_back({i, j});
    }
    if (!unity_defect(out).is_zero_poly()) throw MathError("grouped real identity does not sum to 1");
    return out;
}

namespace {

std::vector<Complex> companion_roots(const DensePoly<Complex>& p) {
    const auto d = static_cast<Eigen::Index>(p.degree());
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(d, d);
    const Complex lead = p.leading();
    for (Eigen::Index i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) comp(i, d - 1) = -p.coeffs()[static_cast<std::size_t>(i)] / lead;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    if (es.info() != Eigen::Success) throw MathError("unreliable factorization: eigenvalue iteration failed");
    std::vector<Complex> roots;
    for (Eigen::Index i = 0; i < d; ++i) roots.push_back(es.eigenvalues()(i));
    return roots;
}

struct Cluster {
    Complex mean;
    unsigned count;
};

// Single-linkage clustering of roots closer than tol.
std::vector<Cluster> cluster_roots(const std::vector<Complex>& roots, double tol) {
    const std::size_t n = roots.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(roots[i] - roots[j]) <= tol) parent[find(i)] = find(j);
    std::vector<Cluster> out;
    std::vector<long> slot(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = find(i);
        if (slot[r] < 0) {
            slot[r] = static_cast<long>(out.size());
            out.push_back({Complex(0.0, 0.0), 0});
        }
        auto& c = out[static_cast<std::size_t>(slot[r])];
        c.mean += roots[i];
        ++c.count;
    }
    for (auto& c : out) c.mean /= static_cast<double>(c.count);
    return out;
}

}  // namespace

FactoredPoly<Complex> factor_numeric(const DensePoly<Complex>& p, double cluster_tol, double residual_bound) {
    if (p.degree() < 1) throw InputError("factor_numeric needs degree at least 1");
    const auto clusters = cluster_roots(companion_roots(p), cluster_tol);
    FactoredPoly<Complex> out;
    out.leading = p.leading();
    for (const auto& c : clusters) {
        Complex lambda = -c.mean;
        if (std::abs(lambda.imag()) <= cluster_tol * std::max(1.0, std::abs(lambda))) lambda.imag(0.0);
        out.factors.push_back({lambda, c.count});
    }
    const DensePoly<Complex> back = out.expand();
    const double scale = std::max(1.0, p.max_abs());
    for (std::size_t k = 0; k <= static_cast<std::size_t>(p.degree()); ++k)
        if (std::abs(back.coeff(k) - p.coeff(k)) > residual_bound * scale)
            throw MathError("unreliable factorization: coefficient " + std::to_string(k) + " off by " +
                            to_string(std::abs(back.coeff(k) - p.coeff(k))));
    return out;
}

namespace {

// Continued-fraction convergents of x with denominators up to max_den.
std::vector<Rational> convergents(double x, long max_den) {
    std::vector<Rational> out;
    if (!std::isfinite(x)) return out;
    mpz_class h0 = 1, h1 = 0, k0 = 0, k1 = 1;
    double r = x;
    for (int step = 0; step < 40; ++step) {
        const double a = std::floor(r);
        const mpz_class ai(a);
        mpz_class h = ai * h0 + h1;
        mpz_class k = ai * k0 + k1;
        if (k > max_den) break;
        out.emplace_back(h, k);
        out.back().canonicalize();
        h1 = h0;
        h0 = h;
        k1 = k0;
        k0 = k;
        const double frac = r - a;
        if (frac < 1e-12) break;
        r = 1.0 / frac;
    }
    return out;
}

}  // namespace

FactoredPoly<Rational> factor_exact(const DensePoly<Rational>& p) {
    if (p.degree() < 0) throw InputError("factor_exact of the zero polynomial");
    FactoredPoly<Rational> out;
    out.leading = p.leading();
    DensePoly<Rational> rest = p.monic();
    auto add_root = [&](const Rational& root) {
        const DensePoly<Rational> lin = DensePoly<Rational>::linear(Rational(-root));
        unsigned mult = 0;
        while (rest.degree() >= 1) {
            auto [q, r] = divmod(rest, lin);
            if (!r.is_zero_poly()) break;
            rest = q;
            ++mult;
        }
        if (mult > 0) out.factors.push_back({Rational(-root), mult});
        return mult > 0;
    };
    add_root(Rational(0));
    while (rest.degree() >= 1) {
        if (rest.degree() == 1) {
            add_root(Rational(-rest.coeff(0)));
            break;
        }
        std::vector<Complex> cf;
        for (const auto& c : rest.coeffs()) cf.emplace_back(c.get_d(), 0.0);
        const auto roots = companion_roots(DensePoly<Complex>(cf));
        std::vector<Complex> candidates = roots;
        for (const auto& c : cluster_roots(roots, 1e-3)) candidates.push_back(c.mean);
        bool progress = false;
        for (const auto& z : candidates) {
            if (std::abs(z.imag()) > 1e-3 * std::max(1.0, std::abs(z))) continue;
            for (const auto& q : convergents(z.real(), 1000000)) {
                if (rest.degree() < 1) break;
                if (sgn(rest(q)) == 0 && add_root(q)) {
                    progress = true;
                    break;
                }
            }
        }
        if (!progress) throw MathError("polynomial does not split over Q");
    }
    return out;
}

DensePoly<Rational> characteristic_polynomial(const Matrix<Rational>& a) {
    if (!a.square()) throw InputError("characteristic polynomial of a non-square matrix");
    const std::size_t n = a.rows();
    std::vector<Rational> c(n + 1, Rational(0));
    c[n] = 1;
    Matrix<Rational> m(n, n);
    for (std::size_t k = 1; k <= n; ++k) {
        Matrix<Rational> next = a * m;
        for (std::size_t i = 0; i < n; ++i) next(i, i) += c[n - k + 1];
        m = std::move(next);
        const Matrix<Rational> am = a * m;
        Rational tr = 0;
        for (std::size_t i = 0; i < n; ++i) tr += am(i, i);
        c[n - k] = -tr / Rational(static_cast<long>(k));
    }
    return DensePoly<Rational>(std::move(c));
}

}  // namespace opkit
