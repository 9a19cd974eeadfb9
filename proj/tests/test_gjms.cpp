#include "generators.hpp"

#include "opkit/gjms.hpp"

#include <gtest/gtest.h>

using namespace opkit;
using namespace opkit::testgen;
using Entry = OperatorHandle<Rational>::DiagonalEntry;

namespace {

GJMSSpec<Rational> spec_q(unsigned n, unsigned k, Rational sc) { return {gjms_coefficients(n, k), sc}; }

SpectralModel<Rational> model_q(unsigned n, std::initializer_list<std::pair<Rational, std::size_t>> e) {
    SpectralModel<Rational> m;
    m.n = n;
    for (const auto& [v, mult] : e) m.entries.push_back({v, mult});
    return m;
}

Rational q(long a, long b = 1) {
    Rational r(a, b);
    r.canonicalize();
    return r;
}

}  // namespace

TEST(GJMS, CoefficientsN4) {
    const auto co = gjms_coefficients(4, 3);
    EXPECT_EQ(co.c, (std::vector<Rational>{q(1, 6), q(0), q(-1, 3)}));
    EXPECT_EQ(co.b, (std::vector<Rational>{q(0), q(-1, 6), q(-1, 2)}));
}

TEST(GJMS, CoefficientIdentityOracle) {
    // (n+2i-2)(n-2i) - n(n-2) = 4i(1-i), evaluated in integers.
    for (long n = 3; n <= 12; ++n) {
        const auto co = gjms_coefficients(static_cast<unsigned>(n), 8);
        EXPECT_EQ(co.b[0], 0);
        for (long i = 1; i <= 8; ++i) {
            EXPECT_EQ((n + 2 * i - 2) * (n - 2 * i) - n * (n - 2), 4 * i * (1 - i));
            EXPECT_EQ(co.c[i - 1] - co.c[0], q(i * (1 - i), n * (n - 1)));
        }
    }
    EXPECT_THROW(gjms_coefficients(2, 1), InputError);
    EXPECT_THROW(gjms_coefficients(4, 0), InputError);
}

TEST(GJMS, ProductFormsAgreeOnRandomModels) {
    Rng rng(55);
    for (unsigned n = 3; n <= 10; ++n)
        for (unsigned k = 1; k <= 6; ++k) {
            SpectralModel<Rational> m;
            m.n = n;
            for (int e = 0; e < 4; ++e)
                m.entries.push_back({small_rational(rng, 20, 3), static_cast<std::size_t>(uniform_int(rng, 1, 3))});
            const Rational sc = small_rational(rng, 30, 2);
            const auto op = gjms_operator(spec_q(n, k, sc), m);
            EXPECT_EQ(op.form_mismatch, 0.0);
            const long nn = n;
            for (std::size_t e = 0; e < m.entries.size(); ++e) {
                Rational expect = 1;
                for (long i = 1; i <= static_cast<long>(k); ++i)
                    expect *= m.entries[e].eigenvalue + q((nn + 2 * i - 2) * (nn - 2 * i), 4 * nn * (nn - 1)) * sc;
                EXPECT_EQ(op.pk.entries()[e].eigenvalue, expect);
            }
        }
}

TEST(GJMS, SphereS4Order4) {
    const auto m = unit_sphere_model<Rational>(4, 3);
    EXPECT_EQ(m.entries.size(), 4u);
    EXPECT_EQ(m.entries[2].eigenvalue, 10);  // l = 2: 2 * 5
    EXPECT_EQ(m.entries[1].multiplicity, 5u);
    EXPECT_EQ(m.entries[2].multiplicity, 14u);
    const auto sc = unit_sphere_curvature<Rational>(4);
    EXPECT_EQ(sc, 12);
    const auto op = gjms_operator(spec_q(4, 2, sc), m);
    EXPECT_EQ(op.form_mismatch, 0.0);
    // Paneitz on S^4: Delta (Delta + 2), i.e. c = (1/6, 0) times Sc = 12.
    for (std::size_t e = 0; e < m.entries.size(); ++e) {
        const Rational l = m.entries[e].eigenvalue;
        EXPECT_EQ(op.pk.entries()[e].eigenvalue, l * (l + 2));
    }
}

TEST(GJMS, FirstOrderIsConformalLaplacian) {
    const auto m = model_q(5, {{q(3), 1}, {q(-2, 3), 2}});
    const auto op = gjms_operator(spec_q(5, 1, q(7)), m);
    EXPECT_EQ(op.pk.diagonal_vector(), op.y.diagonal_vector());
}

TEST(GJMS, FlatCaseIsPower) {
    const auto m = model_q(6, {{q(0), 2}, {q(3), 1}, {q(-1, 2), 1}});
    const auto op = gjms_operator(spec_q(6, 3, q(0)), m);
    ASSERT_EQ(op.in_y.factors.size(), 1u);
    EXPECT_EQ(op.in_y.factors[0].multiplicity, 3u);
    for (std::size_t c = 0; c < m.dim(); ++c) {
        const Rational y = op.y.diagonal_vector()[c];
        EXPECT_EQ(op.pk.diagonal_vector()[c], y * y * y);
    }
    const auto ns = gjms_nullspace(spec_q(6, 3, q(0)), m);
    EXPECT_TRUE(ns.flat);
    EXPECT_EQ(ns.total_dimension, 2u);
    EXPECT_TRUE(ns.consistent);
}

TEST(GJMS, RootsDistinctForNonzeroCurvature) {
    Rng rng(2);
    for (unsigned n = 3; n <= 10; ++n)
        for (unsigned k = 1; k <= 6; ++k) {
            Rational sc = small_rational(rng, 30, 3);
            if (sc == 0) sc = 1;
            const auto op = gjms_operator(spec_q(n, k, sc), model_q(n, {{q(1), 1}}));
            EXPECT_NO_THROW(validate(op.in_y, Tolerance{}));
        }
}

TEST(GJMS, NullSpaceGenericAndEngineered) {
    // n = 5, Sc = 20: Y = Delta + 15/4; -b_2 Sc = 2, hit by Delta = -7/4.
    const auto spec = spec_q(5, 3, q(20));
    const auto generic = gjms_nullspace(spec, model_q(5, {{q(1), 2}, {q(7), 3}}));
    EXPECT_EQ(generic.total_dimension, 0u);
    EXPECT_TRUE(generic.consistent);

    const auto eng = gjms_nullspace(spec, model_q(5, {{q(-7, 4), 3}, {q(1), 1}, {q(2), 2}}));
    EXPECT_EQ(eng.total_dimension, 3u);
    EXPECT_EQ(eng.direct_dimension, 3u);
    ASSERT_EQ(eng.components.size(), 3u);
    for (const auto& c : eng.components) EXPECT_EQ(c.dimension, c.index == 2 ? 3u : 0u);
    EXPECT_EQ(eng.components[1].y_eigenvalue, "2");
}

TEST(GJMS, NullSpaceDimensionAudit) {
    Rng rng(71);
    for (int t = 0; t < 40; ++t) {
        const auto n = static_cast<unsigned>(uniform_int(rng, 3, 9));
        const auto k = static_cast<unsigned>(uniform_int(rng, 1, 5));
        const Rational sc = q(uniform_int(rng, 1, 12) * (uniform_int(rng, 0, 1) ? 1 : -1));
        const auto spec = spec_q(n, k, sc);
        SpectralModel<Rational> m;
        m.n = n;
        // Half of the entries are placed on roots -c_i Sc of the Laplacian form.
        for (int e = 0; e < 5; ++e) {
            Rational v = small_rational(rng, 10, 2);
            if (uniform_int(rng, 0, 1)) v = -spec.coeffs.c[static_cast<std::size_t>(uniform_int(rng, 0, k - 1))] * sc;
            m.entries.push_back({v, static_cast<std::size_t>(uniform_int(rng, 1, 3))});
        }
        const auto rep = gjms_nullspace(spec, m);
        EXPECT_TRUE(rep.consistent);
    }
}

TEST(GJMS, SolveFirstOrder) {
    const auto m = model_q(4, {{q(2), 1}, {q(5), 2}});
    const auto spec = spec_q(4, 1, q(12));
    const Vec<Rational> f{q(4), q(1), q(-7)};
    const auto rep = gjms_solve(spec, m, f);
    // Y = Delta + 2
    EXPECT_EQ(rep.solve.reconstruction, (Vec<Rational>{q(1), q(1, 7), q(-1)}));
    EXPECT_TRUE(rep.solve.exact);
}

TEST(GJMS, SolveSecondOrderCofactors) {
    const unsigned n = 6;
    const Rational sc = q(-5);
    const auto m = model_q(n, {{q(2), 1}, {q(3), 2}, {q(-11, 2), 1}});
    const auto spec = spec_q(n, 2, sc);
    const Vec<Rational> f{q(1), q(2), q(-3), q(5)};
    const auto rep = gjms_solve(spec, m, f);
    const Rational nn(n * (n - 1));
    EXPECT_EQ(rep.cofactors, (std::vector<Rational>{-nn / (2 * sc), nn / (2 * sc)}));
    EXPECT_TRUE(rep.solve.exact);
    EXPECT_EQ(rep.solve.residual, 0.0);
    EXPECT_EQ(rep.direct_error, 0.0);
}

TEST(GJMS, PrintedFormulaSignAudit) {
    Rng rng(9);
    for (unsigned k = 1; k <= 6; ++k) {
        const auto spec = spec_q(7, k, q(3));
        SpectralModel<Rational> m;
        m.n = 7;
        for (int e = 0; e < 3; ++e) m.entries.push_back({q(10 + e * 7), 1});
        const Vec<Rational> f{q(1), q(-2), q(3)};
        const auto rep = gjms_solve(spec, m, f);
        EXPECT_TRUE(rep.solve.exact);
        EXPECT_TRUE(rep.printed_matches_up_to_sign) << k;
        EXPECT_EQ(rep.printed_matches, k % 2 == 1) << k;
        if (k % 2 == 0) EXPECT_GT(rep.printed_residual, 0.0);
        else EXPECT_EQ(rep.printed_residual, 0.0);
    }
}

TEST(GJMS, SolveSingularFactor) {
    // Y-eigenvalue 2 = -b_2 Sc makes factor 2 singular.
    const auto spec = spec_q(5, 3, q(20));
    const auto m = model_q(5, {{q(-7, 4), 1}, {q(1), 1}});
    try {
        gjms_solve(spec, m, Vec<Rational>{q(1), q(1)});
        FAIL();
    } catch (const MathError& e) {
        EXPECT_NE(std::string(e.what()).find("factor 2"), std::string::npos);
    }
    // f supported away from the kernel is fine.
    const auto rep = gjms_solve(spec, m, Vec<Rational>{q(0), q(1)});
    EXPECT_TRUE(rep.solve.exact);
    EXPECT_THROW(gjms_solve(spec_q(5, 2, q(0)), m, Vec<Rational>{q(0), q(1)}), InputError);
}

TEST(GJMS, SolveFloatSphereS5) {
    const auto m = unit_sphere_model<double>(5, 10);
    const GJMSSpec<double> spec{gjms_coefficients(5, 3), unit_sphere_curvature<double>(5)};
    Rng rng(5);
    Vec<double> f(m.dim());
    for (auto& x : f) x = std::uniform_real_distribution<double>(-1, 1)(rng);
    const auto rep = gjms_solve(spec, m, f);
    EXPECT_LE(rep.direct_error, 1e-10);
    EXPECT_LE(rep.solve.residual, 1e-10);
    EXPECT_TRUE(rep.printed_matches);  // k = 3 is odd
}

TEST(GJMS, EigenstructureSingleEntry) {
    const auto spec = spec_q(4, 2, q(12));
    const auto m = model_q(4, {{q(0), 1}, {q(4), 1}, {q(10), 1}});
    // Paneitz on S^4 data: P = Delta(Delta + 2), so mu = 24 at Delta = 4.
    const auto rep = gjms_eigenstructure(spec, m, q(24));
    ASSERT_EQ(rep.components.size(), 1u);
    EXPECT_EQ(rep.total_dimension, 1u);
    EXPECT_TRUE(rep.consistent);
    EXPECT_EQ(rep.components[0].y_root, "6");  // Y = Delta + 2
}

TEST(GJMS, EigenstructureZeroMatchesNullSpace) {
    const auto spec = spec_q(5, 3, q(20));
    const auto m = model_q(5, {{q(-7, 4), 3}, {q(-15, 4), 2}, {q(2), 2}});
    const auto eig = gjms_eigenstructure(spec, m, q(0));
    const auto ns = gjms_nullspace(spec, m);
    EXPECT_EQ(eig.total_dimension, ns.total_dimension);
    EXPECT_EQ(eig.total_dimension, 5u);
}

TEST(GJMS, EigenstructureCollision) {
    // k = 2, n = 4, Sc = 12: P = Y (Y - 2), symmetric about Y = 1, so Y = -1 and
    // Y = 3 share mu = 3. With Y = Delta + 2: Delta = -3 and Delta = 1.
    const auto spec = spec_q(4, 2, q(12));
    const auto m = model_q(4, {{q(-3), 2}, {q(1), 3}, {q(5), 1}});
    const auto rep = gjms_eigenstructure(spec, m, q(3));
    EXPECT_EQ(rep.components.size(), 2u);
    EXPECT_EQ(rep.total_dimension, 5u);
    EXPECT_TRUE(rep.consistent);

    std::vector<OperatorHandle<double>::DiagonalEntry> fe{{-3.0, 2}, {1.0, 3}, {5.0, 1}};
    SpectralModel<double> fm{4, fe, std::nullopt};
    const auto frep = gjms_eigenstructure(GJMSSpec<double>{gjms_coefficients(4, 2), 12.0}, fm, 3.0);
    EXPECT_EQ(frep.total_dimension, 5u);
    EXPECT_TRUE(frep.consistent);
}
