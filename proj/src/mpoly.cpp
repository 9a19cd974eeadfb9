#include "opkit/mpoly.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <sstream>

namespace opkit {

bool Grevlex::operator()(const Exponent& a, const Exponent& b) const {
    const unsigned da = std::accumulate(a.begin(), a.end(), 0u);
    const unsigned db = std::accumulate(b.begin(), b.end(), 0u);
    if (da != db) return da < db;
    for (std::size_t k = a.size(); k-- > 0;)
        if (a[k] != b[k]) return a[k] > b[k];
    return false;
}

MultiPoly MultiPoly::constant(unsigned nvars, const Rational& c) {
    MultiPoly p(nvars);
    p.add_term(Exponent(nvars, 0), c);
    return p;
}

MultiPoly MultiPoly::variable(unsigned nvars, unsigned index) {
    if (index >= nvars) throw InputError("variable index out of range");
    Exponent e(nvars, 0);
    e[index] = 1;
    return monomial(e, Rational(1));
}

MultiPoly MultiPoly::monomial(const Exponent& e, const Rational& c) {
    MultiPoly p(static_cast<unsigned>(e.size()));
    p.add_term(e, c);
    return p;
}

MultiPoly MultiPoly::from_dense(const DensePoly<Rational>& d, unsigned nvars, unsigned index) {
    if (index >= nvars) throw InputError("variable index out of range");
    MultiPoly p(nvars);
    for (std::size_t k = 0; k < d.coeffs().size(); ++k) {
        Exponent e(nvars, 0);
        e[index] = static_cast<unsigned>(k);
        p.add_term(e, d.coeffs()[k]);
    }
    return p;
}

bool MultiPoly::is_constant() const {
    return terms_.empty() || (terms_.size() == 1 && std::all_of(terms_.begin()->first.begin(), terms_.begin()->first.end(),
                                                             [](unsigned x) { return x == 0; }));
}

bool MultiPoly::is_one() const { return is_constant() && !terms_.empty() && terms_.begin()->second == 1; }

unsigned MultiPoly::total_degree() const {
    if (terms_.empty()) return 0;
    const auto& e = leading_exponent();
    return std::accumulate(e.begin(), e.end(), 0u);
}

void MultiPoly::add_term(const Exponent& e, const Rational& c) {
    if (e.size() != nvars_) throw InputError("exponent length does not match nvars");
    if (sgn(c) == 0) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
        it->second += c;
        if (sgn(it->second) == 0) terms_.erase(it);
    }
}

MultiPoly& MultiPoly::operator+=(const MultiPoly& o) {
    if (o.nvars_ != nvars_) throw InputError("variable count mismatch");
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
}

MultiPoly& MultiPoly::operator-=(const MultiPoly& o) {
    if (o.nvars_ != nvars_) throw InputError("variable count mismatch");
    for (const auto& [e, c] : o.terms_) add_term(e, Rational(-c));
    return *this;
}

MultiPoly& MultiPoly::operator*=(const Rational& s) {
    if (sgn(s) == 0) {
        terms_.clear();
        return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
}

void MultiPoly::add_scaled_shifted(const MultiPoly& o, const Rational& c, const Exponent& shift) {
    if (o.nvars_ != nvars_ || shift.size() != nvars_) throw InputError("variable count mismatch");
    Exponent e(nvars_);
    for (const auto& [oe, oc] : o.terms_) {
        for (unsigned k = 0; k < nvars_; ++k) e[k] = oe[k] + shift[k];
        add_term(e, Rational(c * oc));
    }
}

MultiPoly operator*(const MultiPoly& a, const MultiPoly& b) {
    if (a.nvars_ != b.nvars_) throw InputError("variable count mismatch");
    MultiPoly out(a.nvars_);
    for (const auto& [e, c] : a.terms_) out.add_scaled_shifted(b, c, e);
    return out;
}

MultiPoly MultiPoly::monic() const {
    if (is_zero()) return *this;
    return *this * Rational(1 / leading_coefficient());
}

Rational MultiPoly::eval(const std::vector<Rational>& point) const {
    if (point.size() != nvars_) throw InputError("evaluation point has the wrong dimension");
    Rational sum = 0;
    for (const auto& [e, c] : terms_) {
        Rational t = c;
        for (unsigned k = 0; k < nvars_; ++k)
            for (unsigned r = 0; r < e[k]; ++r) t *= point[k];
        sum += t;
    }
    return sum;
}

std::complex<double> MultiPoly::eval(const std::vector<std::complex<double>>& point) const {
    if (point.size() != nvars_) throw InputError("evaluation point has the wrong dimension");
    std::complex<double> sum = 0.0;
    for (const auto& [e, c] : terms_) {
        std::complex<double> t = c.get_d();
        for (unsigned k = 0; k < nvars_; ++k) t *= std::pow(point[k], static_cast<int>(e[k]));
        sum += t;
    }
    return sum;
}

DensePoly<Rational> MultiPoly::to_dense() const {
    if (nvars_ != 1) throw InputError("to_dense needs a univariate polynomial");
    std::vector<Rational> c(total_degree() + 1, Rational(0));
    for (const auto& [e, v] : terms_) c[e[0]] = v;
    return DensePoly<Rational>(std::move(c));
}

std::string MultiPoly::to_string() const {
    if (terms_.empty()) return "0";
    static const char* names3[] = {"x", "y", "z"};
    std::ostringstream os;
    bool first = true;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
        const auto& [e, c] = *it;
        const bool neg = sgn(c) < 0;
        const Rational a = abs(c);
        os << (first ? (neg ? "-" : "") : (neg ? " - " : " + "));
        first = false;
        bool wrote = false;
        const bool unit_deg = std::all_of(e.begin(), e.end(), [](unsigned x) { return x == 0; });
        if (a != 1 || unit_deg) {
            os << a.get_str();
            wrote = true;
        }
        for (unsigned k = 0; k < nvars_; ++k) {
            if (e[k] == 0) continue;
            if (wrote) os << "*";
            if (nvars_ <= 3)
                os << names3[k];
            else
                os << "x" << k + 1;
            if (e[k] > 1) os << "^" << e[k];
            wrote = true;
        }
    }
    return os.str();
}

MultiPoly product(const std::vector<MultiPoly>& factors, unsigned nvars) {
    MultiPoly out = MultiPoly::constant(nvars, Rational(1));
    for (const auto& f : factors) out = out * f;
    return out;
}

std::size_t default_term_budget() {
    if (const char* env = std::getenv("OPKIT_BUDGET")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 1000000;
}

namespace {

bool divides(const Exponent& a, const Exponent& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] > b[k]) return false;
    return true;
}

Exponent exp_sub(const Exponent& b, const Exponent& a) {
    Exponent out(b.size());
    for (std::size_t k = 0; k < b.size(); ++k) out[k] = b[k] - a[k];
    return out;
}

Exponent exp_lcm(const Exponent& a, const Exponent& b) {
    Exponent out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) out[k] = std::max(a[k], b[k]);
    return out;
}

bool coprime(const Exponent& a, const Exponent& b) {
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] != 0 && b[k] != 0) return false;
    return true;
}

struct Tracked {
    MultiPoly p;
    std::vector<MultiPoly> row;

    std::size_t terms() const {
        std::size_t t = p.term_count();
        for (const auto& r : row) t += r.term_count();
        return t;
    }
};

class Engine {
public:
    Engine(std::size_t ngens, unsigned nvars, std::size_t budget) : ngens_(ngens), nvars_(nvars), budget_(budget) {}

    void charge(std::size_t live) const {
        if (live + committed_ > budget_)
            throw BudgetError("basis budget exceeded: " + std::to_string(live + committed_) + " terms > " +
                              std::to_string(budget_));
    }

    // Full reduction of f (all terms) by the current basis, tracking cofactors.
    void reduce(Tracked& f, const std::vector<Tracked>& basis) const {
        MultiPoly work = std::move(f.p);
        MultiPoly rem(nvars_);
        while (!work.is_zero()) {
            const Exponent lt = work.leading_exponent();
            const Rational lc = work.leading_coefficient();
            const Tracked* div = nullptr;
            for (const auto& g : basis)
                if (divides(g.p.leading_exponent(), lt)) {
                    div = &g;
                    break;
                }
            if (div == nullptr) {
                rem.add_term(lt, lc);
                work.add_term(lt, Rational(-lc));
                continue;
            }
            const Rational q = lc / div->p.leading_coefficient();
            const Exponent shift = exp_sub(lt, div->p.leading_exponent());
            work.add_scaled_shifted(div->p, Rational(-q), shift);
            std::size_t live = work.term_count() + rem.term_count();
            for (std::size_t c = 0; c < ngens_; ++c) {
                f.row[c].add_scaled_shifted(div->row[c], Rational(-q), shift);
                live += f.row[c].term_count();
            }
            charge(live);
        }
        f.p = std::move(rem);
    }

    void commit(const Tracked& t) { committed_ += t.terms(); }
    void uncommit(const Tracked& t) { committed_ -= std::min(committed_, t.terms()); }

    Tracked spoly(const Tracked& a, const Tracked& b) const {
        const Exponent l = exp_lcm(a.p.leading_exponent(), b.p.leading_exponent());
        const Exponent sa = exp_sub(l, a.p.leading_exponent());
        const Exponent sb = exp_sub(l, b.p.leading_exponent());
        const Rational ca = 1 / a.p.leading_coefficient();
        const Rational cb = -1 / b.p.leading_coefficient();
        Tracked s{MultiPoly(nvars_), std::vector<MultiPoly>(ngens_, MultiPoly(nvars_))};
        s.p.add_scaled_shifted(a.p, ca, sa);
        s.p.add_scaled_shifted(b.p, cb, sb);
        for (std::size_t c = 0; c < ngens_; ++c) {
            s.row[c].add_scaled_shifted(a.row[c], ca, sa);
            s.row[c].add_scaled_shifted(b.row[c], cb, sb);
        }
        return s;
    }

private:
    std::size_t ngens_;
    unsigned nvars_;
    std::size_t budget_;
    std::size_t committed_ = 0;
};

void make_monic(Tracked& t) {
    const Rational inv = 1 / t.p.leading_coefficient();
    t.p *= inv;
    for (auto& r : t.row) r *= inv;
}

}  // namespace

GroebnerResult groebner(const std::vector<MultiPoly>& gens, const GroebnerOptions& opts) {
    if (gens.empty()) throw InputError("groebner: no generators");
    const unsigned nvars = gens.front().nvars();
    for (const auto& g : gens)
        if (g.nvars() != nvars) throw InputError("groebner: generators disagree on the number of variables");
    if (std::all_of(gens.begin(), gens.end(), [](const MultiPoly& g) { return g.is_zero(); }))
        throw InputError("groebner: all generators are zero");

    const std::size_t m = gens.size();
    Engine eng(m, nvars, opts.term_budget);
    std::vector<Tracked> basis;
    auto unit_row = [&](std::size_t c, const Rational& s) {
        std::vector<MultiPoly> row(m, MultiPoly(nvars));
        row[c] = MultiPoly::constant(nvars, s);
        return row;
    };

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    auto insert = [&](Tracked t) {
        make_monic(t);
        eng.commit(t);
        for (std::size_t i = 0; i < basis.size(); ++i) pairs.emplace_back(i, basis.size());
        basis.push_back(std::move(t));
    };

    for (std::size_t c = 0; c < m; ++c) {
        if (gens[c].is_zero()) continue;
        Tracked t{gens[c], unit_row(c, Rational(1))};
        eng.reduce(t, basis);
        if (!t.p.is_zero()) insert(std::move(t));
    }

    auto has_constant = [&]() {
        return std::any_of(basis.begin(), basis.end(), [](const Tracked& t) { return t.p.is_constant(); });
    };

    while (!pairs.empty() && !has_constant()) {
        // Normal selection: the pair with the smallest lcm degree.
        auto best = pairs.begin();
        unsigned best_deg = ~0u;
        for (auto it = pairs.begin(); it != pairs.end(); ++it) {
            const Exponent l = exp_lcm(basis[it->first].p.leading_exponent(), basis[it->second].p.leading_exponent());
            const unsigned d = std::accumulate(l.begin(), l.end(), 0u);
            if (d < best_deg) {
                best_deg = d;
                best = it;
            }
        }
        const auto [i, j] = *best;
        pairs.erase(best);
        if (coprime(basis[i].p.leading_exponent(), basis[j].p.leading_exponent())) continue;
        Tracked s = eng.spoly(basis[i], basis[j]);
        eng.reduce(s, basis);
        if (!s.p.is_zero()) insert(std::move(s));
    }

    GroebnerResult out;
    const auto one = std::find_if(basis.begin(), basis.end(), [](const Tracked& t) { return t.p.is_constant(); });
    if (one != basis.end()) {
        Tracked t = *one;
        make_monic(t);
        out.basis.push_back(std::move(t.p));
        out.transform.push_back(std::move(t.row));
        return out;
    }

    // Minimal basis: drop elements whose leading monomial is divisible by another's.
    std::vector<Tracked> minimal;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        bool redundant = false;
        for (std::size_t j = 0; j < basis.size() && !redundant; ++j) {
            if (i == j) continue;
            const auto& li = basis[i].p.leading_exponent();
            const auto& lj = basis[j].p.leading_exponent();
            if (divides(lj, li) && (lj != li || j < i)) redundant = true;
        }
        if (!redundant) minimal.push_back(basis[i]);
    }
    // Interreduce.
    for (std::size_t i = 0; i < minimal.size(); ++i) {
        std::vector<Tracked> others;
        for (std::size_t j = 0; j < minimal.size(); ++j)
            if (j != i) others.push_back(minimal[j]);
        eng.reduce(minimal[i], others);
        make_monic(minimal[i]);
    }
    std::sort(minimal.begin(), minimal.end(), [](const Tracked& a, const Tracked& b) {
        return Grevlex{}(a.p.leading_exponent(), b.p.leading_exponent());
    });
    for (auto& t : minimal) {
        out.basis.push_back(std::move(t.p));
        out.transform.push_back(std::move(t.row));
    }
    return out;
}

MultiPoly normal_form(const MultiPoly& f, const std::vector<MultiPoly>& basis) {
    MultiPoly work = f, rem(f.nvars());
    while (!work.is_zero()) {
        const Exponent lt = work.leading_exponent();
        const Rational lc = work.leading_coefficient();
        const MultiPoly* div = nullptr;
        for (const auto& g : basis)
            if (!g.is_zero() && divides(g.leading_exponent(), lt)) {
                div = &g;
                break;
            }
        if (div == nullptr) {
            rem.add_term(lt, lc);
            work.add_term(lt, Rational(-lc));
            continue;
        }
        work.add_scaled_shifted(*div, Rational(-lc / div->leading_coefficient()), exp_sub(lt, div->leading_exponent()));
    }
    return rem;
}

MultiPoly certificate_sum(const IdealCertificate& cert) {
    if (cert.generators.empty()) return MultiPoly();
    MultiPoly sum(cert.generators.front().nvars());
    for (std::size_t i = 0; i < cert.cofactors.size() && i < cert.generators.size(); ++i)
        sum += cert.cofactors[i] * cert.generators[i];
    return sum;
}

bool certificate_verifies(const IdealCertificate& cert) {
    if (!cert.is_unit()) return cert.cofactors.empty();
    return cert.cofactors.size() == cert.generators.size() && certificate_sum(cert).is_one();
}

IdealCertificate unit_certificate(const std::vector<MultiPoly>& gens, const GroebnerOptions& opts) {
    if (gens.empty()) throw InputError("unit_certificate: no generators");
    IdealCertificate cert;
    cert.generators = gens;
    if (std::all_of(gens.begin(), gens.end(), [](const MultiPoly& g) { return g.is_zero(); })) return cert;
    const auto gb = groebner(gens, opts);
    if (gb.basis.size() == 1 && gb.basis.front().is_one()) {
        cert.status = IdealStatus::Unit;
        cert.cofactors = gb.transform.front();
        if (!certificate_sum(cert).is_one()) throw MathError("unit certificate failed to re-expand to 1");
    }
    return cert;
}

std::vector<MultiPoly> select_generators(const std::vector<MultiPoly>& factors, Mask j) {
    std::vector<MultiPoly> out;
    for (unsigned i : mask_indices(j)) {
        if (i >= factors.size()) throw InputError("subset index beyond the factor list");
        out.push_back(factors[i]);
    }
    return out;
}

MultiPoly subset_product(const std::vector<MultiPoly>& factors, Mask j) {
    if (factors.empty()) throw InputError("empty factor list");
    return product(select_generators(factors, j), factors.front().nvars());
}

MultiPoly complement_product(const std::vector<MultiPoly>& factors, Mask i) {
    const Mask full = static_cast<Mask>((Mask{1} << factors.size()) - 1);
    return subset_product(factors, full & ~i);
}

CofactorMap dual_to_alpha(const std::vector<MultiPoly>& factors, const AlphaSystem& alpha,
                          const CertificateMap& beta_certs) {
    if (factors.size() != alpha.ground().size())
        throw InputError("dual_to_alpha: factor count does not match |L|");
    if (alpha.empty()) throw InputError("dual_to_alpha: α is empty");
    const unsigned nvars = factors.front().nvars();
    const AlphaSystem lower = lower_closure(alpha);
    const Mask full = alpha.ground().full();
    if (lower.contains(full)) return {{full, MultiPoly::constant(nvars, Rational(1))}};

    // Q_{I,J} for each processed J ∈ α^u, keyed by J.
    std::map<Mask, CofactorMap> memo;
    std::function<const CofactorMap&(Mask)> solve = [&](Mask j) -> const CofactorMap& {
        if (auto it = memo.find(j); it != memo.end()) return it->second;
        const auto cit = beta_certs.find(j);
        if (cit == beta_certs.end()) throw InputError("missing certificate for J = " + mask_to_string(j));
        const IdealCertificate& cert = cit->second;
        if (!cert.is_unit()) throw InputError("certificate for J = " + mask_to_string(j) + " is not a unit certificate");
        if (cert.generators != select_generators(factors, j))
            throw InputError("certificate for J = " + mask_to_string(j) + " has generators other than {P_j : j in J}");
        if (!certificate_verifies(cert))
            throw MathError("certificate for J = " + mask_to_string(j) + " does not sum to 1");
        CofactorMap out;
        const auto idx = mask_indices(j);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const MultiPoly& qj = cert.cofactors[k];
            if (qj.is_zero()) continue;
            const Mask jj = j & ~(Mask{1} << idx[k]);
            if (lower.contains(jj)) {
                auto [it, _] = out.try_emplace(jj, MultiPoly(nvars));
                it->second += qj;
            } else {
                for (const auto& [i, qi] : solve(jj)) {
                    auto [it, _] = out.try_emplace(i, MultiPoly(nvars));
                    it->second += qj * qi;
                }
            }
        }
        for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
        return memo.emplace(j, std::move(out)).first->second;
    };
    CofactorMap q = solve(full);
    if (!alpha_identity_defect(factors, q).is_zero()) throw MathError("dual_to_alpha: identity does not re-expand to 1");
    return q;
}

MultiPoly alpha_identity_defect(const std::vector<MultiPoly>& factors, const CofactorMap& q) {
    const unsigned nvars = factors.front().nvars();
    MultiPoly sum(nvars);
    for (const auto& [i, qi] : q) sum += qi * complement_product(factors, i);
    return sum - MultiPoly::constant(nvars, Rational(1));
}

CofactorMap reduce_to_maximal(const std::vector<MultiPoly>& factors, const AlphaSystem& alpha, const CofactorMap& q) {
    const AlphaSystem maxs = maximal_elements(lower_closure(alpha));
    const unsigned nvars = factors.front().nvars();
    CofactorMap out;
    for (const auto& [i, qi] : q) {
        const auto host = std::find_if(maxs.members().begin(), maxs.members().end(), [&](Mask m) { return is_subset(i, m); });
        if (host == maxs.members().end()) throw InputError("cofactor index " + mask_to_string(i) + " is not in α");
        auto [it, _] = out.try_emplace(*host, MultiPoly(nvars));
        it->second += qi * subset_product(factors, *host & ~i);
    }
    return out;
}

BetaReport certify_beta_decomposition(const std::vector<MultiPoly>& factors, const AlphaSystem& beta,
                                      const GroebnerOptions& opts) {
    if (beta.empty()) throw InputError("certify_beta_decomposition: β is empty");
    BetaReport rep;
    for (Mask j : beta.members()) {
        IdealCertificate cert;
        if (j != 0) cert = unit_certificate(select_generators(factors, j), opts);
        rep.all_unit = rep.all_unit && cert.is_unit();
        rep.certificates.emplace(j, std::move(cert));
    }
    return rep;
}

}  // namespace opkit
