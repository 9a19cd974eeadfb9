#pragma once

// Koszul complex of a commuting family P_0..P_l on copies V_J of V indexed
// by subsets J of L, with maps P_{J,i} = (-1)^{|J<i|} P_i : V_J -> V_{J+i}.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"
#include "opkit/matrix.hpp"
#include "opkit/operator.hpp"
#include "opkit/poly.hpp"
#include "opkit/posets.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace opkit {

inline constexpr std::size_t kKoszulDimensionBudget = 4096;

// (-1)^{|{j in J : j < i}|}
inline int koszul_sign(Mask j, unsigned i) {
    const Mask below = static_cast<Mask>(j & ((Mask{1} << i) - 1));
    return popcount(below) % 2 == 0 ? 1 : -1;
}

// Subsets of size p in increasing mask order.
inline std::vector<Mask> grade_subsets(const IndexSet& ground, unsigned p) {
    std::vector<Mask> out;
    for (Mask m = 0; m <= ground.full(); ++m)
        if (popcount(m) == p) out.push_back(m);
    return out;
}

template <class F>
using GradedVector = std::vector<Vec<F>>;  // one block per subset of grade_subsets(p)

template <class F>
class KoszulComplex {
public:
    KoszulComplex(std::vector<OperatorHandle<F>> factors, std::optional<std::vector<OperatorHandle<F>>> homotopy,
                  double check_tol)
        : factors_(std::move(factors)), homotopy_(std::move(homotopy)), check_tol_(check_tol) {
        ground_ = IndexSet(static_cast<unsigned>(factors_.size() - 1));
        dim_ = factors_.front().dim();
        for (unsigned p = 0; p <= ground_.size(); ++p) {
            grades_.push_back(grade_subsets(ground_, p));
            for (std::size_t k = 0; k < grades_.back().size(); ++k) position_[grades_.back()[k]] = k;
        }
    }

    const IndexSet& ground() const { return ground_; }
    std::size_t dim() const { return dim_; }
    const std::vector<OperatorHandle<F>>& factors() const { return factors_; }
    const std::optional<std::vector<OperatorHandle<F>>>& homotopy() const { return homotopy_; }
    double check_tol() const { return check_tol_; }
    // Grades 0..|L|.
    unsigned top_grade() const { return ground_.size(); }
    const std::vector<Mask>& subsets(unsigned p) const { return grades_.at(p); }
    std::size_t grade_dim(unsigned p) const { return p > top_grade() ? 0 : grades_[p].size() * dim_; }
    std::size_t total_dim() const { return (std::size_t{1} << ground_.size()) * dim_; }
    std::size_t position(Mask j) const { return position_.at(j); }
    bool materializable() const {
        for (const auto& f : factors_)
            if (f.backend() == OperatorHandle<F>::Backend::Apply) return false;
        return true;
    }

    // P(p): V(p) -> V(p+1)
    GradedVector<F> differential(unsigned p, const GradedVector<F>& x) const {
        GradedVector<F> out(p < top_grade() ? grades_[p + 1].size() : 0, zeros<F>(dim_));
        if (p >= top_grade()) return out;
        for (std::size_t k = 0; k < grades_[p].size(); ++k) {
            const Mask j = grades_[p][k];
            for (unsigned i = 0; i < ground_.size(); ++i) {
                if (j & (Mask{1} << i)) continue;
                axpy(out[position(j | (Mask{1} << i))], from_int<F>(koszul_sign(j, i)), factors_[i](x[k]));
            }
        }
        return out;
    }

    // Q(p): V(p) -> V(p-1), the edge V_{J+i} -> V_J carrying (-1)^{|J<i|} Q_i.
    GradedVector<F> contraction(unsigned p, const GradedVector<F>& x) const {
        const auto& q = require_homotopy();
        GradedVector<F> out(p > 0 ? grades_[p - 1].size() : 0, zeros<F>(dim_));
        if (p == 0) return out;
        for (std::size_t k = 0; k < grades_[p].size(); ++k) {
            const Mask j = grades_[p][k];
            for (unsigned i : mask_indices(j)) {
                const Mask lower = static_cast<Mask>(j & ~(Mask{1} << i));
                axpy(out[position(lower)], from_int<F>(koszul_sign(lower, i)), q[i](x[k]));
            }
        }
        return out;
    }

    // Block matrix of P(p), rows C(|L|, p+1) n by columns C(|L|, p) n.
    Matrix<F> differential_matrix(unsigned p) const {
        Matrix<F> m(grade_dim(p + 1), grade_dim(p));
        if (p >= top_grade()) return m;
        const auto mats = factor_matrices(factors_);
        for (std::size_t k = 0; k < grades_[p].size(); ++k) {
            const Mask j = grades_[p][k];
            for (unsigned i = 0; i < ground_.size(); ++i) {
                if (j & (Mask{1} << i)) continue;
                m.place(position(j | (Mask{1} << i)) * dim_, k * dim_, mats[i] * from_int<F>(koszul_sign(j, i)));
            }
        }
        return m;
    }

    Matrix<F> contraction_matrix(unsigned p) const {
        Matrix<F> m(p == 0 ? 0 : grade_dim(p - 1), grade_dim(p));
        if (p == 0) return m;
        const auto mats = factor_matrices(require_homotopy());
        for (std::size_t k = 0; k < grades_[p].size(); ++k) {
            const Mask j = grades_[p][k];
            for (unsigned i : mask_indices(j)) {
                const Mask lower = static_cast<Mask>(j & ~(Mask{1} << i));
                m.place(position(lower) * dim_, k * dim_, mats[i] * from_int<F>(koszul_sign(lower, i)));
            }
        }
        return m;
    }

private:
    const std::vector<OperatorHandle<F>>& require_homotopy() const {
        if (!homotopy_) throw InputError("complex has no homotopy operators");
        return *homotopy_;
    }
    std::vector<Matrix<F>> factor_matrices(const std::vector<OperatorHandle<F>>& ops) const {
        std::vector<Matrix<F>> out;
        for (const auto& op : ops) {
            if (op.backend() == OperatorHandle<F>::Backend::Apply)
                throw InputError("block matrices need dense or diagonal operators");
            out.push_back(op.to_matrix());
        }
        return out;
    }

    IndexSet ground_;
    std::size_t dim_ = 0;
    std::vector<OperatorHandle<F>> factors_;
    std::optional<std::vector<OperatorHandle<F>>> homotopy_;
    double check_tol_;
    std::vector<std::vector<Mask>> grades_;
    std::map<Mask, std::size_t> position_;
};

// Commutation is spot-checked unless check_commutation is false (used to
// build deliberately broken complexes for negative tests).
template <class F>
KoszulComplex<F> build_complex(const std::vector<OperatorHandle<F>>& factors,
                               std::optional<std::vector<OperatorHandle<F>>> homotopy = std::nullopt,
                               double check_tol = kDefaultFloatCheck, bool check_commutation = true,
                               std::uint64_t seed = 7) {
    if (factors.empty()) throw InputError("Koszul complex needs at least one operator");
    if (factors.size() > kMaxIndexSetSize) throw InputError("too many operators for a Koszul complex");
    if (check_commutation) check_commuting(factors, seed);
    for (const auto& f : factors)
        if (f.dim() != factors.front().dim()) throw InputError("operator family has mixed dimensions");
    if (homotopy) {
        if (homotopy->size() != factors.size()) throw InputError("homotopy needs one operator per factor");
        for (const auto& q : *homotopy)
            if (q.dim() != factors.front().dim()) throw InputError("homotopy operator has the wrong dimension");
    }
    return KoszulComplex<F>(factors, std::move(homotopy), check_tol);
}

struct GradeResidual {
    unsigned grade = 0;
    double residual = 0.0;
    bool holds = false;
};

struct ComplexReport {
    std::vector<GradeResidual> grades;
    double max_residual = 0.0;
    bool holds = true;
    std::optional<unsigned> failing_grade;
};

namespace detail {

template <class F>
bool within(const KoszulComplex<F>& kc, double residual, double scale) {
    if constexpr (is_exact_v<F>) {
        (void)kc;
        (void)scale;
        return residual == 0.0;
    } else {
        return residual <= kc.check_tol() * std::max(1.0, scale);
    }
}

template <class F>
GradedVector<F> random_graded(std::mt19937_64& rng, std::size_t blocks, std::size_t n) {
    GradedVector<F> x;
    for (std::size_t b = 0; b < blocks; ++b) x.push_back(random_vector<F>(rng, n));
    return x;
}

template <class F>
double graded_norm(const GradedVector<F>& x) {
    double s = 0.0;
    for (const auto& v : x) s = std::max(s, norm2(v));
    return s;
}

template <class F>
GradedVector<F> graded_sub(GradedVector<F> a, const GradedVector<F>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = a[k] - b[k];
    return a;
}

inline void record(ComplexReport& rep, GradeResidual g) {
    rep.max_residual = std::max(rep.max_residual, g.residual);
    if (!g.holds && rep.holds) {
        rep.holds = false;
        rep.failing_grade = g.grade;
    }
    rep.grades.push_back(g);
}

}  // namespace detail

// max over p of |P(p+1) P(p)|: the largest entry of the assembled composite,
// or the largest probe output on matrix-free backends.
template <class F>
ComplexReport verify_complex(const KoszulComplex<F>& kc, std::uint64_t seed = 7, int probes = 4) {
    ComplexReport rep;
    std::mt19937_64 rng(seed);
    for (unsigned p = 0; p + 1 < kc.top_grade(); ++p) {
        GradeResidual g{p, 0.0, true};
        double scale = 1.0;
        if (kc.materializable()) {
            const auto a = kc.differential_matrix(p);
            const auto b = kc.differential_matrix(p + 1);
            g.residual = (b * a).max_abs();
            scale = std::max(a.max_abs(), 1.0) * std::max(b.max_abs(), 1.0);
        } else {
            for (int t = 0; t < probes; ++t) {
                const auto x = detail::random_graded<F>(rng, kc.subsets(p).size(), kc.dim());
                g.residual = std::max(g.residual, detail::graded_norm(kc.differential(p + 1, kc.differential(p, x))));
                scale = std::max(scale, detail::graded_norm(x));
            }
        }
        g.holds = detail::within(kc, g.residual, scale);
        detail::record(rep, g);
    }
    return rep;
}

// Q(p+1) P(p) + P(p-1) Q(p) = id on every grade p = 0..|L|.
template <class F>
ComplexReport verify_homotopy(const KoszulComplex<F>& kc, std::uint64_t seed = 7, int probes = 4) {
    if (!kc.homotopy()) throw InputError("complex has no homotopy operators");
    const auto& q = *kc.homotopy();
    std::vector<OperatorHandle<F>> all = kc.factors();
    all.insert(all.end(), q.begin(), q.end());
    check_commuting(all, seed);  // [Q_i, P_j] = 0 along with the factor relations
    std::mt19937_64 rng(seed);
    for (int t = 0; t < probes; ++t) {
        const auto v = random_vector<F>(rng, kc.dim());
        Vec<F> s = zeros<F>(kc.dim());
        for (std::size_t i = 0; i < q.size(); ++i) s = s + q[i](kc.factors()[i](v));
        if (!detail::within(kc, norm2(s - v), norm2(v))) throw MathError("homotopy operators fail sum Q_i P_i = id");
    }
    ComplexReport rep;
    for (unsigned p = 0; p <= kc.top_grade(); ++p) {
        GradeResidual g{p, 0.0, true};
        if (kc.materializable()) {
            Matrix<F> h = Matrix<F>::identity(kc.grade_dim(p));
            h = h * from_int<F>(-1);
            if (p < kc.top_grade()) h = h + kc.contraction_matrix(p + 1) * kc.differential_matrix(p);
            if (p > 0) h = h + kc.differential_matrix(p - 1) * kc.contraction_matrix(p);
            g.residual = h.max_abs();
        } else {
            for (int t = 0; t < probes; ++t) {
                const auto x = detail::random_graded<F>(rng, kc.subsets(p).size(), kc.dim());
                GradedVector<F> y(x.size(), zeros<F>(kc.dim()));
                if (p < kc.top_grade()) y = kc.contraction(p + 1, kc.differential(p, x));
                if (p > 0) {
                    const auto z = kc.differential(p - 1, kc.contraction(p, x));
                    for (std::size_t k = 0; k < y.size(); ++k) y[k] = y[k] + z[k];
                }
                g.residual = std::max(g.residual, detail::graded_norm(detail::graded_sub(y, x)));
            }
        }
        g.holds = detail::within(kc, g.residual, 1.0);
        detail::record(rep, g);
    }
    return rep;
}

struct GradeExactness {
    unsigned grade = 0;
    std::size_t dim = 0;
    std::size_t kernel_dim = 0;  // dim ker P(p)
    std::size_t image_rank = 0;  // rank P(p-1)
    bool exact = false;
};

struct ExactnessReport {
    std::vector<GradeExactness> grades;
    bool exact_everywhere = true;
};

template <class F>
void require_rank_budget(const KoszulComplex<F>& kc, std::size_t budget) {
    if (!kc.materializable()) throw InputError("exactness by rank needs dense or diagonal operators");
    if (kc.total_dim() > budget)
        throw BudgetError("Koszul total dimension " + std::to_string(kc.total_dim()) + " exceeds budget " +
                          std::to_string(budget));
}

template <class F>
ExactnessReport exactness_by_rank(const KoszulComplex<F>& kc, const Tolerance& tol = {},
                                  std::size_t budget = kKoszulDimensionBudget) {
    require_rank_budget(kc, budget);
    ExactnessReport rep;
    std::size_t prev_rank = 0;
    for (unsigned p = 0; p <= kc.top_grade(); ++p) {
        const std::size_t r = p < kc.top_grade() ? rank(kc.differential_matrix(p), tol) : 0;
        GradeExactness g{p, kc.grade_dim(p), kc.grade_dim(p) - r, prev_rank, false};
        g.exact = g.kernel_dim == g.image_rank;
        rep.exact_everywhere = rep.exact_everywhere && g.exact;
        rep.grades.push_back(g);
        prev_rank = r;
    }
    return rep;
}

// 0 -> V --(P_i; P_j)--> V + V --(P_j, -P_i)--> V -> 0 is exact iff both maps
// have rank n.
template <class F>
bool diamond_exact(const KoszulComplex<F>& kc, unsigned i, unsigned j, const Tolerance& tol = {},
                   std::size_t budget = kKoszulDimensionBudget) {
    if (i == j) throw InputError("diamond needs two distinct indices");
    if (i >= kc.ground().size() || j >= kc.ground().size()) throw InputError("diamond index out of range");
    if (!kc.materializable()) throw InputError("diamond exactness needs dense or diagonal operators");
    const std::size_t n = kc.dim();
    if (4 * n > budget) throw BudgetError("diamond dimension exceeds budget");
    const auto pi = kc.factors()[i].to_matrix();
    const auto pj = kc.factors()[j].to_matrix();
    Matrix<F> in(2 * n, n), out(n, 2 * n);
    in.place(0, 0, pi);
    in.place(n, 0, pj);
    out.place(0, 0, pj);
    out.place(0, n, -pi);
    return rank(in, tol) == n && rank(out, tol) == n;
}

template <class F>
struct QfreeReport {
    Vec<F> u;
    double residual = 0.0;  // |P u - f| / max(|f|, 1)
    bool exact = false;
};

// Recovers u with P^i u = u^i from a solution tuple of P_i u^i = f by chasing
// preimages through the diamonds. y_S = P_{L\S} u is found for growing S from
// y_{S\a} and y_{S\b} (a < b the two smallest elements of S).
template <class F>
QfreeReport<F> reconstruct_Qfree(const KoszulComplex<F>& kc, const Vec<F>& f, const std::vector<Vec<F>>& tuple,
                                 const Tolerance& tol = {}) {
    const unsigned size = kc.ground().size();
    const std::size_t n = kc.dim();
    if (tuple.size() != size) throw InputError("tuple needs one entry per factor");
    if (f.size() != n) throw InputError("right-hand side has the wrong dimension");
    if (!kc.materializable()) throw InputError("Q-free reconstruction needs dense or diagonal operators");
    const auto& P = kc.factors();
    auto agree = [&](const Vec<F>& a, const Vec<F>& b) {
        if constexpr (is_exact_v<F>)
            return a == b;
        else
            return norm2(a - b) <= kc.check_tol() * std::max({1.0, norm2(a), norm2(b)});
    };
    for (unsigned i = 0; i < size; ++i) {
        if (tuple[i].size() != n) throw InputError("tuple entry " + std::to_string(i) + " has the wrong dimension");
        if (!agree(P[i](tuple[i]), f)) throw MathError("tuple entry " + std::to_string(i) + " fails P_i u^i = f");
    }
    for (unsigned a = 0; a < size; ++a)
        for (unsigned b = a + 1; b < size; ++b)
            if (!diamond_exact(kc, a, b, tol))
                throw MathError("diamond (" + std::to_string(a) + "," + std::to_string(b) + ") is not exact");

    std::vector<Matrix<F>> mats;
    for (const auto& op : P) mats.push_back(op.to_matrix());
    std::map<Mask, Vec<F>> memo;
    for (unsigned i = 0; i < size; ++i) memo[Mask{1} << i] = tuple[i];
    auto chase = [&](auto&& self, Mask s) -> const Vec<F>& {
        if (auto it = memo.find(s); it != memo.end()) return it->second;
        const auto idx = mask_indices(s);
        const unsigned a = idx[0], b = idx[1];
        const Vec<F> ya = self(self, static_cast<Mask>(s & ~(Mask{1} << a)));  // P_a y_S
        const Vec<F> yb = self(self, static_cast<Mask>(s & ~(Mask{1} << b)));  // P_b y_S
        if (!agree(P[b](ya), P[a](yb)))
            throw MathError("inconsistent tuple: pair (" + std::to_string(a) + "," + std::to_string(b) +
                            ") disagrees at " + mask_to_string(s));
        Matrix<F> stacked(2 * n, n);
        stacked.place(0, 0, mats[a]);
        stacked.place(n, 0, mats[b]);
        Vec<F> rhs = ya;
        rhs.insert(rhs.end(), yb.begin(), yb.end());
        const auto y = solve(stacked, rhs, tol);
        if (!y)
            throw MathError("no preimage for pair (" + std::to_string(a) + "," + std::to_string(b) + ") at " +
                            mask_to_string(s));
        return memo.emplace(s, *y).first->second;
    };
    QfreeReport<F> rep;
    // For l = 0 the single tuple entry is u itself.
    rep.u = size == 1 ? tuple[0] : chase(chase, kc.ground().full());
    Vec<F> pu = rep.u;
    for (const auto& op : P) pu = op(pu);
    for (unsigned i = 0; i < size; ++i) {
        Vec<F> w = rep.u;
        for (unsigned j = 0; j < size; ++j)
            if (j != i) w = P[j](w);
        if (!agree(w, tuple[i])) throw MathError("reconstruction fails P^" + std::to_string(i) + " u = u^" + std::to_string(i));
    }
    rep.residual = norm2(pu - f) / std::max(norm2(f), 1.0);
    if constexpr (is_exact_v<F>) rep.exact = pu == f;
    return rep;
}

// Q_i = s_i[D] from a Bezout identity sum s_i p_i = 1 modulo the
// characteristic polynomial of D, when one exists.
inline std::optional<std::vector<OperatorHandle<Rational>>> polynomial_homotopy(
    const OperatorHandle<Rational>& d, const std::vector<DensePoly<Rational>>& polys) {
    if (polys.empty()) throw InputError("polynomial_homotopy needs at least one polynomial");
    const auto chi = characteristic_polynomial(d.to_matrix());
    // Running gcd g = sum_i s_i p_i + t chi.
    DensePoly<Rational> g = chi;
    std::vector<DensePoly<Rational>> s(polys.size(), DensePoly<Rational>());
    for (std::size_t i = 0; i < polys.size(); ++i) {
        if (polys[i].is_zero_poly()) continue;
        const auto r = ext_gcd(g, polys[i]);
        for (auto& c : s) c = c * r.s;
        s[i] = s[i] + r.t;
        g = r.g;
    }
    if (g.degree() != 0) return std::nullopt;
    std::vector<OperatorHandle<Rational>> out;
    const Rational inv = Rational(1) / g.leading();
    for (auto& c : s) out.push_back(poly_operator(d, (c % chi) * DensePoly<Rational>::constant(inv)));
    return out;
}

}  // namespace opkit
