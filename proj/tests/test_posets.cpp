#include "opkit/posets.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace opkit;

namespace {

AlphaSystem sys(unsigned ell, std::vector<std::vector<unsigned>> lists) { return AlphaSystem::from_lists(ell, lists); }

// Enumerates systems over |L| = ell + 1: exhaustively while 2^(2^|L|) is small,
// otherwise a seeded random sample.
template <class Fn>
void for_each_system(unsigned ell, Fn&& fn) {
    const IndexSet g(ell);
    const std::size_t subsets = g.power_set_size();
    if (subsets <= 16) {
        for (std::uint64_t code = 1; code < (std::uint64_t{1} << subsets); ++code) {
            std::vector<Mask> m;
            for (std::size_t j = 0; j < subsets; ++j)
                if (code >> j & 1u) m.push_back(static_cast<Mask>(j));
            fn(AlphaSystem(g, m));
        }
    } else {
        std::mt19937_64 rng(ell);
        for (int t = 0; t < 4000; ++t) {
            std::vector<Mask> m;
            const double density = std::uniform_real_distribution<double>(0.02, 0.5)(rng);
            for (std::size_t j = 0; j < subsets; ++j)
                if (std::bernoulli_distribution(density)(rng)) m.push_back(static_cast<Mask>(j));
            if (m.empty()) m.push_back(static_cast<Mask>(rng() % subsets));
            fn(AlphaSystem(g, m));
        }
    }
}

}  // namespace

TEST(Closures, SingletonOverTwo) {
    const auto c = closures(sys(1, {{0}}));
    EXPECT_EQ(c.lower, sys(1, {{}, {0}}));
    EXPECT_EQ(c.upper, sys(1, {{0}, {0, 1}}));
    EXPECT_EQ(c.mins, sys(1, {{0}}));
    EXPECT_EQ(c.maxs, sys(1, {{0}}));
}

TEST(Closures, EmptySetSystem) {
    const auto c = closures(sys(2, {{}}));
    EXPECT_EQ(c.lower, sys(2, {{}}));
    EXPECT_EQ(c.upper.size(), 8u);
    EXPECT_EQ(c.mins, sys(2, {{}}));
    EXPECT_EQ(c.maxs, sys(2, {{}}));
}

TEST(Closures, OverlappingPairs) {
    const auto a = sys(2, {{0, 1}, {1, 2}});
    const auto c = closures(a);
    EXPECT_EQ(c.mins, a);
    EXPECT_EQ(c.maxs, a);
    EXPECT_EQ(c.lower, sys(2, {{}, {0}, {1}, {2}, {0, 1}, {1, 2}}));
}

TEST(Complements, SingletonsOverTwo) {
    const auto c = complements(sys(1, {{0}, {1}}));
    EXPECT_EQ(c.alpha_u, sys(1, {{0, 1}}));
}

TEST(Complements, EmptySetSystem) {
    const auto c = complements(sys(2, {{}}));
    EXPECT_EQ(c.alpha_u.size(), 7u);
    EXPECT_FALSE(c.alpha_u.contains(0));
}

TEST(Complements, InvolutionsAndPointwiseAgreement) {
    for (unsigned ell = 0; ell <= 4; ++ell)
        for_each_system(ell, [](const AlphaSystem& a) {
            const auto c = complements(a);  // throws if the two definitions disagree
            EXPECT_EQ(c.alpha_u, upper_complement_pointwise(a));
            EXPECT_EQ(c.alpha_l, lower_complement_pointwise(a));
            if (!c.alpha_u.empty()) EXPECT_EQ(lower_complement_pointwise(c.alpha_u), lower_closure(a));
            if (!c.alpha_l.empty()) EXPECT_EQ(upper_complement_pointwise(c.alpha_l), upper_closure(a));
        });
}

TEST(Closures, Idempotence) {
    for (unsigned ell = 0; ell <= 4; ++ell)
        for_each_system(ell, [](const AlphaSystem& a) {
            EXPECT_EQ(minimal_elements(minimal_elements(a)), minimal_elements(a));
            EXPECT_EQ(maximal_elements(maximal_elements(a)), maximal_elements(a));
            EXPECT_EQ(lower_closure(lower_closure(a)), lower_closure(a));
            EXPECT_EQ(upper_closure(upper_closure(a)), upper_closure(a));
            EXPECT_EQ(lower_closure(maximal_elements(a)), lower_closure(a));
            EXPECT_EQ(upper_closure(minimal_elements(a)), upper_closure(a));
        });
}

TEST(Closures, MinMaxAgreeWithPairwiseDefinition) {
    for_each_system(3, [](const AlphaSystem& a) {
        std::vector<Mask> mins, maxs;
        for (Mask m : a.members()) {
            bool is_min = true, is_max = true;
            for (Mask o : a.members()) {
                if (o != m && is_subset(o, m)) is_min = false;
                if (o != m && is_subset(m, o)) is_max = false;
            }
            if (is_min) mins.push_back(m);
            if (is_max) maxs.push_back(m);
        }
        EXPECT_EQ(minimal_elements(a), AlphaSystem(a.ground(), mins));
        EXPECT_EQ(maximal_elements(a), AlphaSystem(a.ground(), maxs));
    });
}

TEST(Roles, DecompositionAndDual) {
    EXPECT_THROW(require_decomposition_role(sys(1, {{0, 1}})), InputError);
    EXPECT_NO_THROW(require_decomposition_role(sys(1, {{0}, {1}})));
    EXPECT_THROW(require_dual_role(sys(1, {{}})), InputError);
    EXPECT_NO_THROW(require_dual_role(sys(1, {{0, 1}})));
    EXPECT_THROW(IndexSet(20), InputError);
    EXPECT_THROW(sys(1, {{2}}), InputError);
}

TEST(OptimalAlpha, OnlyFullSetIsUnit) {
    const auto r = optimal_alpha(IndexSet(1), [](Mask j) { return j == 3; });
    EXPECT_EQ(r.alpha_opt, sys(1, {{0, 1}}));
    EXPECT_EQ(r.beta_opt, sys(1, {{0}, {1}}));
}

TEST(OptimalAlpha, AllFactorsInvertible) {
    const auto r = optimal_alpha(IndexSet(3), [](Mask j) { return j != 0; });
    EXPECT_EQ(r.alpha_opt, sys(3, {{0}, {1}, {2}, {3}}));
    EXPECT_EQ(r.beta_opt, sys(3, {{}}));
}

TEST(OptimalAlpha, NothingIsUnit) {
    const auto r = optimal_alpha(IndexSet(2), [](Mask) { return false; });
    EXPECT_TRUE(r.alpha_opt.empty());
    EXPECT_EQ(r.beta_opt, sys(2, {{0, 1, 2}}));
}

TEST(OptimalAlpha, NonMonotoneOracleDetected) {
    // {0} is a unit set but {0,1} is not.
    try {
        optimal_alpha(IndexSet(1), [](Mask j) { return j == 1; });
        FAIL();
    } catch (const MathError& e) {
        EXPECT_NE(std::string(e.what()).find("oracle violates upward closure"), std::string::npos);
    }
}

TEST(OptimalAlpha, MatchesFullEnumerationOnMonotoneOracles) {
    // Monotone oracles are upper closures of random generating systems.
    for (unsigned ell = 0; ell <= 4; ++ell)
        for_each_system(ell, [](const AlphaSystem& gen) {
            const auto up = upper_closure(gen);
            const auto r = optimal_alpha(gen.ground(), [&](Mask j) { return up.contains(j); });
            EXPECT_EQ(r.alpha_p, up);
            EXPECT_EQ(r.alpha_opt, minimal_elements(gen));
            EXPECT_EQ(r.beta_opt, maximal_elements(complements(up).alpha_l));
            EXPECT_LE(r.oracle_calls, up.ground().power_set_size() + up.ground().size() * r.alpha_opt.size());
        });
}

TEST(OptimalAlpha, PrunesOracleCalls) {
    std::size_t calls = 0;
    const auto r = optimal_alpha(IndexSet(9), [&](Mask j) {
        ++calls;
        return j != 0;
    });
    EXPECT_EQ(r.alpha_opt.size(), 10u);
    EXPECT_EQ(calls, r.oracle_calls);
    EXPECT_LT(calls, 1024u);
}
