#include "generators.hpp"

#include "opkit/mpoly.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cstdlib>
#include <iostream>

using namespace opkit;

namespace {

MultiPoly p1(std::initializer_list<long> c) {
    std::vector<Rational> v;
    for (long x : c) v.emplace_back(x);
    return MultiPoly::from_dense(DensePoly<Rational>(v));
}

const MultiPoly X = MultiPoly::variable(2, 0);
const MultiPoly Y = MultiPoly::variable(2, 1);
MultiPoly C(long c) { return MultiPoly::constant(2, Rational(c)); }

void expect_transform_sound(const std::vector<MultiPoly>& gens, const GroebnerResult& gb) {
    ASSERT_EQ(gb.basis.size(), gb.transform.size());
    for (std::size_t r = 0; r < gb.basis.size(); ++r) {
        MultiPoly sum(gens.front().nvars());
        for (std::size_t c = 0; c < gens.size(); ++c) sum += gb.transform[r][c] * gens[c];
        EXPECT_EQ(sum, gb.basis[r]);
    }
}

// Heuristic variety oracle: damped Gauss-Newton on the stacked generators from
// many complex starting points, restricted to a bounded box.
bool numeric_common_zero(const std::vector<MultiPoly>& gens, unsigned seed) {
    using Cx = std::complex<double>;
    const unsigned k = gens.front().nvars();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 2.0);
    auto residual = [&](const std::vector<Cx>& z) {
        double s = 0.0;
        for (const auto& g : gens) s += std::norm(g.eval(z));
        return std::sqrt(s);
    };
    for (int start = 0; start < 200; ++start) {
        std::vector<Cx> z(k);
        for (auto& v : z) v = Cx(nd(rng), nd(rng));
        for (int it = 0; it < 80; ++it) {
            // Jacobian by finite differences in complex arithmetic (analytic functions).
            const std::size_t m = gens.size();
            Eigen::MatrixXcd jac(m, k);
            Eigen::VectorXcd f(m);
            for (std::size_t r = 0; r < m; ++r) f(static_cast<Eigen::Index>(r)) = gens[r].eval(z);
            for (unsigned c = 0; c < k; ++c) {
                auto zp = z;
                const double h = 1e-7 * std::max(1.0, std::abs(z[c]));
                zp[c] += h;
                for (std::size_t r = 0; r < m; ++r)
                    jac(static_cast<Eigen::Index>(r), c) = (gens[r].eval(zp) - f(static_cast<Eigen::Index>(r))) / h;
            }
            const Eigen::VectorXcd step = jac.completeOrthogonalDecomposition().solve(f);
            for (unsigned c = 0; c < k; ++c) z[c] -= step(c);
            if (std::abs(z[0]) > 1e3 || (k > 1 && std::abs(z[1]) > 1e3)) break;
        }
        bool bounded = true;
        for (const auto& v : z) bounded = bounded && std::abs(v) <= 1e3;
        if (bounded && residual(z) < 1e-9) return true;
    }
    return false;
}

}  // namespace

TEST(MultiPoly, GrevlexOrder) {
    Grevlex lt;
    EXPECT_TRUE(lt({0, 1}, {1, 1}));
    EXPECT_TRUE(lt({0, 2}, {1, 1}));  // x*y > y^2
    EXPECT_TRUE(lt({0, 0, 2}, {1, 0, 1}));
    EXPECT_FALSE(lt({1, 1}, {1, 1}));
}

TEST(MultiPoly, ArithmeticAndPrinting) {
    const MultiPoly f = X * X + Y * Y - C(1);
    EXPECT_EQ(f.total_degree(), 2u);
    EXPECT_EQ(f.to_string(), "x^2 + y^2 - 1");
    EXPECT_EQ(f.eval({Rational(3, 5), Rational(4, 5)}), 0);
    EXPECT_TRUE((f - f).is_zero());
    EXPECT_EQ((X + Y) * (X - Y), X * X - Y * Y);
}

TEST(Groebner, AlreadyABasis) {
    const auto gb = groebner({X, Y});
    ASSERT_EQ(gb.basis.size(), 2u);
    EXPECT_EQ(gb.basis[0], Y);
    EXPECT_EQ(gb.basis[1], X);
    expect_transform_sound({X, Y}, gb);
}

TEST(Groebner, UnitIdeal) {
    const auto gb = groebner({p1({0, 1}), p1({1, 1})});
    ASSERT_EQ(gb.basis.size(), 1u);
    EXPECT_TRUE(gb.basis[0].is_one());
    expect_transform_sound({p1({0, 1}), p1({1, 1})}, gb);
}

TEST(Groebner, CircleAndDiagonal) {
    const std::vector<MultiPoly> gens = {X * X + Y * Y - C(1), X - Y};
    const auto gb = groebner(gens);
    expect_transform_sound(gens, gb);
    const MultiPoly target = (Y * Y * Rational(2) - C(1)).monic();
    EXPECT_NE(std::find(gb.basis.begin(), gb.basis.end(), target), gb.basis.end());
    // Points of the variety: x = y = ±1/sqrt(2); every basis element vanishes there.
    const double s = 1.0 / std::sqrt(2.0);
    for (double sign : {1.0, -1.0})
        for (const auto& g : gb.basis) EXPECT_NEAR(std::abs(g.eval(std::vector<std::complex<double>>{{sign * s, 0.0}, {sign * s, 0.0}})), 0.0, 1e-12);
}

TEST(Groebner, BudgetExceeded) {
    std::vector<MultiPoly> gens;
    testgen::Rng rng(3);
    for (int g = 0; g < 3; ++g) {
        MultiPoly f(3);
        for (unsigned a = 0; a <= 3; ++a)
            for (unsigned b = 0; a + b <= 3; ++b)
                for (unsigned c = 0; a + b + c <= 3; ++c) f.add_term({a, b, c}, Rational(testgen::uniform_int(rng, -5, 5)));
        gens.push_back(f);
    }
    try {
        groebner(gens, GroebnerOptions{50});
        FAIL();
    } catch (const BudgetError& e) {
        EXPECT_NE(std::string(e.what()).find("basis budget exceeded"), std::string::npos);
    }
}

TEST(Groebner, EnvironmentBudgetOverride) {
    ::setenv("OPKIT_BUDGET", "1234", 1);
    EXPECT_EQ(GroebnerOptions{}.term_budget, 1234u);
    ::unsetenv("OPKIT_BUDGET");
    EXPECT_EQ(GroebnerOptions{}.term_budget, 1000000u);
}

TEST(Groebner, RandomTransformsAreSound) {
    testgen::Rng rng(21);
    for (int t = 0; t < 40; ++t) {
        std::vector<MultiPoly> gens;
        const int count = static_cast<int>(testgen::uniform_int(rng, 1, 3));
        for (int g = 0; g < count; ++g) {
            MultiPoly f(2);
            for (unsigned a = 0; a <= 2; ++a)
                for (unsigned b = 0; a + b <= 2; ++b)
                    if (testgen::uniform_int(rng, 0, 2) == 0) f.add_term({a, b}, Rational(testgen::uniform_int(rng, -4, 4)));
            if (f.is_zero()) f = X + C(1);
            gens.push_back(f);
        }
        const auto gb = groebner(gens);
        expect_transform_sound(gens, gb);
        // Every generator reduces to zero: the basis generates the ideal.
        for (const auto& g : gens) EXPECT_TRUE(normal_form(g, gb.basis).is_zero());
        for (const auto& b : gb.basis) EXPECT_EQ(b.leading_coefficient(), 1);
    }
}

TEST(UnitCertificate, XAndXPlusOne) {
    const auto c = unit_certificate({p1({0, 1}), p1({1, 1})});
    ASSERT_TRUE(c.is_unit());
    EXPECT_EQ(c.cofactors[0], p1({-1}));
    EXPECT_EQ(c.cofactors[1], p1({1}));
    EXPECT_TRUE(certificate_verifies(c));
}

TEST(UnitCertificate, CommonZeroAtOrigin) {
    const auto c = unit_certificate({X, Y});
    EXPECT_FALSE(c.is_unit());
    EXPECT_TRUE(c.cofactors.empty());
}

TEST(UnitCertificate, NoRationalZeroButComplexZero) {
    // x^2 + 1 and y^2 have no common real zero, yet the ideal is proper: (±i, 0).
    const auto c = unit_certificate({X * X + C(1), Y * Y});
    EXPECT_FALSE(c.is_unit());
    EXPECT_TRUE(numeric_common_zero({X * X + C(1), Y * Y}, 1));
}

TEST(UnitCertificate, AgreesWithUnivariateCoprimality) {
    testgen::Rng rng(13);
    for (int t = 0; t < 60; ++t) {
        std::vector<Rational> ca, cb;
        for (int k = 0; k < 1 + t % 3; ++k) ca.push_back(Rational(testgen::uniform_int(rng, -3, 3)));
        for (int k = 0; k < 1 + t % 2; ++k) cb.push_back(Rational(testgen::uniform_int(rng, -3, 3)));
        ca.push_back(1);
        cb.push_back(1);
        const DensePoly<Rational> a(ca), b(cb);
        const bool coprime = ext_gcd(a, b).g.degree() == 0;
        const auto cert = unit_certificate({MultiPoly::from_dense(a), MultiPoly::from_dense(b)});
        EXPECT_EQ(cert.is_unit(), coprime);
        EXPECT_TRUE(certificate_verifies(cert));
    }
}

TEST(UnitCertificate, NullstellensatzShadowOnCuratedSuite) {
    const std::vector<std::vector<MultiPoly>> suite = {
        {X, Y},
        {X, X + C(1)},
        {X * X + Y * Y - C(1), X - Y},
        {X * X + C(1), Y * Y},
        {X * Y - C(1), X - Y},
        {X * Y - C(1), X},
        {X, Y, X + Y - C(1)},
        {X, Y, X + Y},
        {X * X - Y, Y * Y - X, X * Y - C(2)},
        {X * X * X - Y, X - C(2), Y - C(8)},
        {X * X * X - Y, X - C(2), Y - C(7)},
        {X * X + Y * Y, X * Y - C(1)},
        {X * X - C(2), Y * Y - C(3), X * Y},
    };
    for (std::size_t s = 0; s < suite.size(); ++s) {
        const auto cert = unit_certificate(suite[s]);
        EXPECT_TRUE(certificate_verifies(cert));
        EXPECT_EQ(numeric_common_zero(suite[s], static_cast<unsigned>(s)), !cert.is_unit()) << "suite entry " << s;
    }
}

TEST(UnitCertificate, GenericitySmokeTest) {
    // Random dense linear/quadratic sets with |I| >= k: frequency of unit ideals.
    testgen::Rng rng(99);
    int unit = 0, total = 0;
    for (int t = 0; t < 40; ++t) {
        std::vector<MultiPoly> gens;
        for (int g = 0; g < 3; ++g) {
            MultiPoly f(2);
            const unsigned deg = static_cast<unsigned>(testgen::uniform_int(rng, 1, 2));
            for (unsigned a = 0; a <= deg; ++a)
                for (unsigned b = 0; a + b <= deg; ++b) f.add_term({a, b}, Rational(testgen::uniform_int(rng, -5, 5)));
            gens.push_back(f);
        }
        if (std::any_of(gens.begin(), gens.end(), [](const MultiPoly& g) { return g.is_zero(); })) continue;
        ++total;
        if (unit_certificate(gens).is_unit()) ++unit;
    }
    RecordProperty("unit_fraction", std::to_string(unit) + "/" + std::to_string(total));
    std::cout << "generic unit frequency: " << unit << "/" << total << "\n";
    EXPECT_GT(total, 0);
}

TEST(CertifyBeta, ThreeLinesWithoutTriplePoint) {
    const std::vector<MultiPoly> f = {X, Y, X + Y - C(1)};
    const auto r = certify_beta_decomposition(f, AlphaSystem::from_lists(2, {{0, 1, 2}}));
    EXPECT_TRUE(r.all_unit);
    EXPECT_TRUE(certificate_verifies(r.certificates.at(7)));
    // Pairwise intersections (0,0), (0,1), (1,0) are not common to all three.
    for (const auto& pt : std::vector<std::vector<Rational>>{{0, 0}, {0, 1}, {1, 0}}) {
        int vanish = 0;
        for (const auto& g : f) vanish += sgn(g.eval(pt)) == 0;
        EXPECT_EQ(vanish, 2);
    }
}

TEST(CertifyBeta, ConcurrentLines) {
    const std::vector<MultiPoly> f = {X, Y, X + Y};
    for (const auto& g : f) EXPECT_EQ(g.eval({Rational(0), Rational(0)}), 0);
    EXPECT_FALSE(certify_beta_decomposition(f, AlphaSystem::from_lists(2, {{0, 1, 2}})).all_unit);
}

TEST(CertifyBeta, NonConstantSingleton) {
    const std::vector<MultiPoly> f = {X, Y, X + Y - C(1)};
    EXPECT_FALSE(certify_beta_decomposition(f, AlphaSystem::from_lists(2, {{1}, {0, 1, 2}})).all_unit);
}

namespace {

CertificateMap certs_for(const std::vector<MultiPoly>& f, const AlphaSystem& alpha) {
    CertificateMap out;
    const auto comp = complements(lower_closure(alpha));
    for (Mask j : comp.alpha_u.members())
        out.emplace(j, unit_certificate(select_generators(f, j)));
    return out;
}

}  // namespace

TEST(DualToAlpha, TwoLinearFactors) {
    const std::vector<MultiPoly> f = {p1({0, 1}), p1({1, 1})};
    const auto alpha = AlphaSystem::from_lists(1, {{0}, {1}});
    const auto q = dual_to_alpha(f, alpha, certs_for(f, alpha));
    EXPECT_TRUE(alpha_identity_defect(f, q).is_zero());
    // Q_{0} (x+1) + Q_{1} x = 1 forces Q_{0} = 1, Q_{1} = -1 among constants.
    EXPECT_EQ(q.at(1), p1({1}));
    EXPECT_EQ(q.at(2), p1({-1}));
}

TEST(DualToAlpha, UnitFactors) {
    const std::vector<MultiPoly> f = {p1({1}), p1({1}), p1({1})};
    const auto alpha = AlphaSystem::from_lists(2, {{}});
    const auto q = dual_to_alpha(f, alpha, certs_for(f, alpha));
    EXPECT_TRUE(alpha_identity_defect(f, q).is_zero());
}

TEST(DualToAlpha, CrossCheckAgainstPartitionOfUnity) {
    const std::vector<MultiPoly> f = {p1({0, 1}), p1({1, 1}), p1({2, 1})};
    const auto alpha = AlphaSystem::from_lists(2, {{}, {0}, {1}, {2}});
    const auto q = dual_to_alpha(f, alpha, certs_for(f, alpha));
    EXPECT_TRUE(alpha_identity_defect(f, q).is_zero());
    FactoredPoly<Rational> P;
    P.factors = {{Rational(0), 1}, {Rational(1), 1}, {Rational(2), 1}};
    const auto cert = partition_of_unity(P);
    // Folding onto singletons and reducing mod P_i reproduces the unique cofactors.
    const auto folded = reduce_to_maximal(f, alpha, q);
    EXPECT_TRUE(alpha_identity_defect(f, folded).is_zero());
    for (unsigned i = 0; i < 3; ++i) {
        const auto qi = folded.count(Mask{1} << i) ? folded.at(Mask{1} << i).to_dense() : DensePoly<Rational>{};
        EXPECT_EQ(qi % f[i].to_dense(), cert.cofactors[i]);
    }
}

TEST(DualToAlpha, MissingCertificateNamed) {
    const std::vector<MultiPoly> f = {p1({0, 1}), p1({1, 1}), p1({2, 1})};
    const auto alpha = AlphaSystem::from_lists(2, {{0}, {1}, {2}});
    try {
        dual_to_alpha(f, alpha, {});
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("missing certificate for J = {0,1,2}"), std::string::npos);
    }
}

TEST(DualToAlpha, RandomUnivariateAndBivariateSuites) {
    testgen::Rng rng(17);
    int built = 0;
    for (int t = 0; t < 80; ++t) {
        const unsigned ell = static_cast<unsigned>(testgen::uniform_int(rng, 1, 3));
        std::vector<MultiPoly> f;
        for (unsigned i = 0; i <= ell; ++i) {
            if (t % 2 == 0) {
                f.push_back(MultiPoly::from_dense(DensePoly<Rational>::linear(Rational(testgen::uniform_int(rng, -4, 4)))
                                                      .pow(static_cast<unsigned>(testgen::uniform_int(rng, 1, 2))),
                                                  2, 0));
            } else {
                MultiPoly g = X * Rational(testgen::uniform_int(rng, -2, 2)) + Y * Rational(testgen::uniform_int(rng, -2, 2)) +
                              C(testgen::uniform_int(rng, -2, 2));
                if (g.is_zero()) g = C(1);
                f.push_back(g);
            }
        }
        // α from the unit oracle: optimal decomposition system.
        const auto opt = optimal_alpha(IndexSet(ell), [&](Mask j) { return j != 0 && unit_certificate(select_generators(f, j)).is_unit(); });
        if (!opt.alpha_p.contains(IndexSet(ell).full())) continue;  // no decomposition exists
        const AlphaSystem alpha = opt.beta_opt;
        CertificateMap certs;
        for (Mask j : opt.alpha_p.members()) certs.emplace(j, unit_certificate(select_generators(f, j)));
        const auto q = dual_to_alpha(f, alpha, certs);
        EXPECT_TRUE(alpha_identity_defect(f, q).is_zero());
        EXPECT_TRUE(alpha_identity_defect(f, reduce_to_maximal(f, alpha, q)).is_zero());
        ++built;
    }
    EXPECT_GT(built, 20);
}
