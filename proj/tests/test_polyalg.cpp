#include "generators.hpp"

#include "opkit/poly.hpp"

#include <gtest/gtest.h>

using namespace opkit;
using RP = DensePoly<Rational>;

namespace {

RP poly(std::initializer_list<long> c) {
    std::vector<Rational> v;
    for (long x : c) v.emplace_back(x);
    return RP(v);
}

FactoredPoly<Rational> factored(std::initializer_list<std::pair<long, unsigned>> f) {
    FactoredPoly<Rational> P;
    for (const auto& [l, p] : f) P.factors.push_back({Rational(l), p});
    return P;
}

// Independent oracle: solve the square linear system obtained by equating
// coefficients in sum_i Q_i P^i = 1 with deg Q_i <= p_i - 1.
std::optional<std::vector<RP>> brute_force_cofactors(const FactoredPoly<Rational>& P) {
    const std::size_t d = P.degree();
    Matrix<Rational> a(d, d);
    std::size_t col = 0;
    for (std::size_t i = 0; i < P.factors.size(); ++i) {
        const RP comp = P.complement(i);
        for (unsigned s = 0; s < P.factors[i].multiplicity; ++s, ++col)
            for (std::size_t r = 0; r < d; ++r) a(r, col) = comp.coeff(r >= s ? r - s : d + 1);
    }
    Vec<Rational> rhs = zeros<Rational>(d);
    rhs[0] = 1;
    const auto inv = inverse(a);
    if (!inv) return std::nullopt;
    const auto x = *inv * rhs;
    std::vector<RP> out;
    col = 0;
    for (const auto& f : P.factors) {
        std::vector<Rational> c(x.begin() + static_cast<long>(col), x.begin() + static_cast<long>(col + f.multiplicity));
        out.emplace_back(c);
        col += f.multiplicity;
    }
    return out;
}

}  // namespace

TEST(ExtGcd, CoprimeLinear) {
    const auto r = ext_gcd(poly({1, 1}), poly({2, 1}));
    EXPECT_EQ(r.g, RP::one());
    EXPECT_EQ(r.s, poly({-1}));
    EXPECT_EQ(r.t, poly({1}));
}

TEST(ExtGcd, IdenticalInputs) {
    const auto r = ext_gcd(poly({0, 0, 1}), poly({0, 0, 1}));
    EXPECT_EQ(r.g, poly({0, 0, 1}));
    EXPECT_EQ(r.s * poly({0, 0, 1}) + r.t * poly({0, 0, 1}), r.g);
}

TEST(ExtGcd, SquareAgainstLinear) {
    const auto r = ext_gcd(poly({0, 0, 1}), poly({1, 1}));
    EXPECT_EQ(r.g, RP::one());
    EXPECT_EQ(r.s, poly({1}));
    EXPECT_EQ(r.t, poly({1, -1}));
}

TEST(ExtGcd, RejectsFloatMode) {
    const DensePoly<double> a(std::vector<double>{1.0, 1.0});
    EXPECT_THROW(ext_gcd(a, a), InputError);
}

TEST(ExtGcd, DegreeBoundsOnRandomPairs) {
    testgen::Rng rng(11);
    for (int t = 0; t < 100; ++t) {
        std::vector<Rational> ca, cb;
        for (int k = 0; k < 1 + t % 5; ++k) ca.push_back(testgen::small_rational(rng));
        for (int k = 0; k < 1 + t % 4; ++k) cb.push_back(testgen::small_rational(rng));
        ca.push_back(1);
        cb.push_back(1);
        const RP a(ca), b(cb);
        const auto r = ext_gcd(a, b);
        EXPECT_EQ(r.s * a + r.t * b, r.g);
        EXPECT_TRUE((a % r.g).is_zero_poly());
        EXPECT_TRUE((b % r.g).is_zero_poly());
        // The bounds cannot both hold when the gcd has the degree of an input.
        if (r.g.degree() < std::min(a.degree(), b.degree())) {
            EXPECT_LT(r.s.degree(), b.degree() - r.g.degree());
            EXPECT_LT(r.t.degree(), a.degree() - r.g.degree());
        }
    }
}

TEST(NilpotentInverse, Examples) {
    EXPECT_EQ(nilpotent_inverse_series(Rational(1), Rational(0), 2), poly({1, -1}));
    EXPECT_EQ(nilpotent_inverse_series(Rational(2), Rational(0), 1), RP::constant(Rational(1, 2)));
    const RP s = nilpotent_inverse_series(Rational(0), Rational(1), 3);
    const RP expected = -(RP::one() + RP::linear(Rational(1)) + RP::linear(Rational(1)).pow(2));
    EXPECT_EQ(s, expected);
    EXPECT_EQ((s * poly({0, 1})) % RP::linear(Rational(1)).pow(3), RP::one());
}

TEST(NilpotentInverse, Pole) {
    try {
        nilpotent_inverse_series(Rational(3), Rational(3), 2);
        FAIL();
    } catch (const MathError& e) {
        EXPECT_NE(std::string(e.what()).find("series pole"), std::string::npos);
    }
}

TEST(NilpotentInverse, ProductIsOneModulo) {
    testgen::Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        const auto roots = testgen::distinct_roots(rng, 2);
        const auto p = static_cast<unsigned>(testgen::uniform_int(rng, 1, 6));
        const RP s = nilpotent_inverse_series(roots[0], roots[1], p);
        EXPECT_LE(s.degree(), static_cast<long>(p) - 1);
        EXPECT_EQ((s * RP::linear(roots[0])) % RP::linear(roots[1]).pow(p), RP::one());
    }
}

TEST(PartitionOfUnity, TwoSimpleRoots) {
    const auto c = partition_of_unity(factored({{1, 1}, {2, 1}}));
    EXPECT_EQ(c.cofactors[0], RP::one());
    EXPECT_EQ(c.cofactors[1], poly({-1}));
    EXPECT_TRUE(unity_defect(c).is_zero_poly());
}

TEST(PartitionOfUnity, SingleFactor) {
    const auto c = partition_of_unity(factored({{5, 3}}));
    ASSERT_EQ(c.cofactors.size(), 1u);
    EXPECT_EQ(c.cofactors[0], RP::one());
    EXPECT_EQ(c.complements[0], RP::one());
}

TEST(PartitionOfUnity, DoubleRootAndSimpleRoot) {
    const auto c = partition_of_unity(factored({{0, 2}, {1, 1}}));
    EXPECT_EQ(c.cofactors[0], poly({1, -1}));
    EXPECT_EQ(c.complements[0], poly({1, 1}));
    EXPECT_EQ(c.cofactors[1], RP::one());
    EXPECT_EQ(c.complements[1], poly({0, 0, 1}));
    EXPECT_TRUE(unity_defect(c).is_zero_poly());
}

TEST(PartitionOfUnity, DuplicateRootRejected) {
    try {
        partition_of_unity(factored({{1, 1}, {1, 2}}));
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate root"), std::string::npos);
    }
}

TEST(PartitionOfUnity, FloatClusterRejected) {
    FactoredPoly<double> P;
    P.factors = {{1.0, 1}, {1.0 + 1e-14, 1}};
    try {
        partition_of_unity(P);
        FAIL();
    } catch (const MathError& e) {
        EXPECT_NE(std::string(e.what()).find("ill-conditioned root cluster"), std::string::npos);
    }
}

TEST(PartitionOfUnity, FloatModeIdentityWithinEpsilon) {
    FactoredPoly<double> P;
    P.factors = {{0.5, 2}, {-1.25, 3}, {3.0, 1}};
    const auto c = partition_of_unity(P);
    EXPECT_TRUE(certificate_holds(c));
}

TEST(PartitionOfUnity, RandomSoundnessAndDegreeBound) {
    testgen::Rng rng(1);
    for (int t = 0; t < 200; ++t) {
        const auto P = testgen::random_factored(rng, 5, 4);
        const auto c = partition_of_unity(P);
        EXPECT_TRUE(unity_defect(c).is_zero_poly());
        for (std::size_t i = 0; i < c.cofactors.size(); ++i)
            EXPECT_LE(c.cofactors[i].degree(), static_cast<long>(P.factors[i].multiplicity) - 1);
    }
}

TEST(PartitionOfUnity, ClosedFormMatchesNormalizedRoute) {
    testgen::Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const auto P = testgen::random_simple(rng, 6);
        const auto a = partition_of_unity(P, {}, CofactorRoute::Normalized);
        const auto b = partition_of_unity(P, {}, CofactorRoute::ClosedForm);
        EXPECT_EQ(a.cofactors, b.cofactors);
    }
}

TEST(PartitionOfUnity, MatchesBruteForceLinearSystem) {
    testgen::Rng rng(3);
    for (int t = 0; t < 100; ++t) {
        const auto P = testgen::random_factored(rng, 4, 4);
        const auto oracle = brute_force_cofactors(P);
        ASSERT_TRUE(oracle.has_value()) << "coefficient system singular";
        EXPECT_EQ(partition_of_unity(P).cofactors, *oracle);
    }
}

TEST(PartitionOfUnity, LeadingSeriesCoefficientIsFiltrationConstant) {
    testgen::Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const auto P = testgen::random_factored(rng, 4, 3);
        for (std::size_t i = 0; i < P.factors.size(); ++i) {
            Rational alpha = 1;
            for (std::size_t j = 0; j < P.factors.size(); ++j)
                if (j != i) {
                    const Rational d = P.factors[j].lambda - P.factors[i].lambda;
                    for (unsigned r = 0; r < P.factors[j].multiplicity; ++r) alpha /= d;
                }
            EXPECT_EQ(normalized_cofactor_series(P, i)[0], alpha);
        }
    }
}

namespace {

FactoredPoly<GaussRational> gauss_factored(std::initializer_list<std::tuple<long, long, unsigned>> f) {
    FactoredPoly<GaussRational> P;
    for (const auto& [re, im, p] : f) P.factors.push_back({GaussRational(Rational(re), Rational(im)), p});
    return P;
}

bool all_real(const DensePoly<GaussRational>& q) {
    return std::all_of(q.coeffs().begin(), q.coeffs().end(), [](const GaussRational& c) { return c.is_real(); });
}

}  // namespace

TEST(RealPartition, SinglePair) {
    const auto c = real_partition(gauss_factored({{0, 1, 1}, {0, -1, 1}}));
    ASSERT_EQ(c.cofactors.size(), 1u);
    EXPECT_EQ(c.cofactors[0], DensePoly<GaussRational>::one());
    EXPECT_EQ(c.complements[0], DensePoly<GaussRational>::one());
    EXPECT_EQ(c.mode, CertificateMode::GroupedReal);
}

TEST(RealPartition, RealRootAndPair) {
    const auto c = real_partition(gauss_factored({{0, 0, 1}, {0, 1, 1}, {0, -1, 1}}));
    ASSERT_EQ(c.cofactors.size(), 2u);
    EXPECT_EQ(c.cofactors[0], DensePoly<GaussRational>::one());
    EXPECT_EQ(c.cofactors[1], DensePoly<GaussRational>(std::vector<GaussRational>{0, -1}));
    EXPECT_TRUE(unity_defect(c).is_zero_poly());
}

TEST(RealPartition, AllRealDegeneratesToFullMode) {
    const auto c = real_partition(gauss_factored({{1, 0, 1}, {2, 0, 1}}));
    const auto full = partition_of_unity(gauss_factored({{1, 0, 1}, {2, 0, 1}}));
    EXPECT_EQ(c.cofactors, full.cofactors);
    EXPECT_EQ(c.complements, full.complements);
}

TEST(RealPartition, RejectsOpenRootSet) {
    EXPECT_THROW(real_partition(gauss_factored({{0, 1, 1}, {1, 0, 1}})), InputError);
}

TEST(RealPartition, RandomConjugateClosedSets) {
    testgen::Rng rng(9);
    for (int t = 0; t < 60; ++t) {
        FactoredPoly<GaussRational> P;
        const auto reals = testgen::distinct_roots(rng, static_cast<std::size_t>(testgen::uniform_int(rng, 0, 2)));
        for (const auto& r : reals) P.factors.push_back({GaussRational(r), static_cast<unsigned>(testgen::uniform_int(rng, 1, 3))});
        const auto re = testgen::distinct_roots(rng, static_cast<std::size_t>(testgen::uniform_int(rng, 1, 2)));
        for (const auto& a : re) {
            const Rational b(testgen::uniform_int(rng, 1, 5), testgen::uniform_int(rng, 1, 3));
            const auto p = static_cast<unsigned>(testgen::uniform_int(rng, 1, 3));
            P.factors.push_back({GaussRational(a, b), p});
            P.factors.push_back({GaussRational(a, Rational(-b)), p});
        }
        const auto c = real_partition(P);
        EXPECT_TRUE(unity_defect(c).is_zero_poly());
        for (const auto& q : c.cofactors) EXPECT_TRUE(all_real(q));
        for (const auto& q : c.complements) EXPECT_TRUE(all_real(q));
        // Grouping the complex identity term by term gives the same sum.
        const auto full = partition_of_unity(P);
        DensePoly<GaussRational> grouped, ungrouped;
        for (std::size_t g = 0; g < c.cofactors.size(); ++g) grouped += c.cofactors[g] * c.complements[g];
        for (std::size_t i = 0; i < full.cofactors.size(); ++i) ungrouped += full.cofactors[i] * full.complements[i];
        EXPECT_EQ(grouped, ungrouped);
    }
}

TEST(FactorNumeric, QuadraticFormula) {
    const DensePoly<Complex> p(std::vector<Complex>{2.0, -3.0, 1.0});
    auto f = factor_numeric(p);
    ASSERT_EQ(f.factors.size(), 2u);
    std::sort(f.factors.begin(), f.factors.end(),
              [](const auto& a, const auto& b) { return a.lambda.real() > b.lambda.real(); });
    EXPECT_NEAR(f.factors[0].lambda.real(), -1.0, 1e-12);
    EXPECT_NEAR(f.factors[1].lambda.real(), -2.0, 1e-12);
    EXPECT_EQ(f.factors[0].multiplicity, 1u);
}

TEST(FactorNumeric, RepeatedRoot) {
    const auto f = factor_numeric(DensePoly<Complex>(std::vector<Complex>{0.0, 0.0, 1.0}), 1e-6);
    ASSERT_EQ(f.factors.size(), 1u);
    EXPECT_EQ(f.factors[0].multiplicity, 2u);
    EXPECT_NEAR(std::abs(f.factors[0].lambda), 0.0, 1e-12);
}

TEST(FactorNumeric, NearClusterMerged) {
    DensePoly<Complex> p = DensePoly<Complex>::linear(-1.0).pow(2) * DensePoly<Complex>::linear(-1.0000001);
    const auto f = factor_numeric(p, 1e-3);
    ASSERT_EQ(f.factors.size(), 1u);
    EXPECT_EQ(f.factors[0].multiplicity, 3u);
}

TEST(FactorNumeric, UnreliableWhenClusteringIsTooCoarse) {
    DensePoly<Complex> p = DensePoly<Complex>::linear(-1.0) * DensePoly<Complex>::linear(-1.5);
    try {
        factor_numeric(p, 1.0);
        FAIL();
    } catch (const MathError& e) {
        EXPECT_NE(std::string(e.what()).find("unreliable factorization"), std::string::npos);
    }
}

TEST(FactorExact, RecoversRationalRoots) {
    testgen::Rng rng(8);
    for (int t = 0; t < 40; ++t) {
        const auto P = testgen::random_factored(rng, 3, 3);
        const RP e = P.expand();
        const auto f = factor_exact(e * Rational(3, 2));
        EXPECT_EQ(f.expand(), e * Rational(3, 2));
        EXPECT_EQ(f.factors.size(), P.factors.size());
    }
}

TEST(FactorExact, RejectsIrreducibleQuadratic) {
    EXPECT_THROW(factor_exact(poly({1, 0, 1})), MathError);
}

TEST(CharacteristicPolynomial, JordanMatrix) {
    const auto j = testgen::jordan_matrix({{Rational(2), 2}, {Rational(-1), 1}});
    const RP expected = RP::linear(Rational(-2)).pow(2) * RP::linear(Rational(1));
    EXPECT_EQ(characteristic_polynomial(j), expected);
    testgen::Rng rng(1);
    EXPECT_EQ(characteristic_polynomial(testgen::conjugated(rng, j)), expected);
}
