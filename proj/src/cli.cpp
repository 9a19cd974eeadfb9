#include "opkit/cli.hpp"

#include "opkit/gjms.hpp"
#include "opkit/io.hpp"
#include "opkit/koszul.hpp"
#include "opkit/mpoly.hpp"
#include "opkit/opcore.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace opkit::cli {
namespace {

using io::json;

struct Settings {
    bool exact = true;
    double epsilon = 1e-12;
    double check_tol = kDefaultFloatCheck;
    std::uint64_t seed = 7;
    std::size_t term_budget = 1000000;
    std::size_t koszul_budget = kKoszulDimensionBudget;

    Tolerance tol() const { return Tolerance{epsilon}; }
    GroebnerOptions groebner() const { return GroebnerOptions{term_budget}; }

    json to_json() const {
        return {{"mode", exact ? "exact" : "float"},
                {"epsilon", epsilon},
                {"check_tolerance", check_tol},
                {"seed", seed},
                {"budgets", {{"terms", term_budget}, {"koszul_dim", koszul_budget}}}};
    }
};

struct Overrides {
    std::optional<std::string> mode;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> budget_terms;
};

double as_positive(const json& j, const std::string& where) {
    if (!j.is_number()) throw InputError(where + ": expected a number");
    const double v = j.get<double>();
    if (!(v > 0)) throw InputError(where + ": must be positive");
    return v;
}

std::optional<std::size_t> env_budget() {
    const char* env = std::getenv("OPKIT_BUDGET");
    if (!env) return std::nullopt;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || v == 0) throw InputError("OPKIT_BUDGET must be a positive integer");
    return static_cast<std::size_t>(v);
}

// Precedence: command-line flag, then OPKIT_BUDGET (budgets only), then the
// file's config block, then defaults.
Settings resolve(const json* config, const Overrides& o) {
    Settings s;
    if (config) {
        io::allow_keys(*config, {"mode", "epsilon", "check_tolerance", "seed", "budgets"}, "config");
        if (config->contains("mode")) {
            const auto& m = (*config)["mode"];
            if (!m.is_string() || (m != "exact" && m != "float"))
                throw InputError("config.mode: expected \"exact\" or \"float\"");
            s.exact = m == "exact";
        }
        if (config->contains("epsilon")) s.epsilon = as_positive((*config)["epsilon"], "config.epsilon");
        if (config->contains("check_tolerance"))
            s.check_tol = as_positive((*config)["check_tolerance"], "config.check_tolerance");
        if (config->contains("seed")) s.seed = io::as_size((*config)["seed"], "config.seed");
        if (config->contains("budgets")) {
            const auto& b = (*config)["budgets"];
            io::allow_keys(b, {"terms", "koszul_dim"}, "config.budgets");
            if (b.contains("terms")) s.term_budget = io::as_size(b["terms"], "config.budgets.terms");
            if (b.contains("koszul_dim")) s.koszul_budget = io::as_size(b["koszul_dim"], "config.budgets.koszul_dim");
            if (s.term_budget == 0 || s.koszul_budget == 0) throw InputError("config.budgets: budgets must be positive");
        }
    }
    if (const auto e = env_budget()) s.term_budget = *e;
    if (o.mode) s.exact = *o.mode == "exact";
    if (o.epsilon) s.epsilon = *o.epsilon;
    if (o.seed) s.seed = *o.seed;
    if (o.budget_terms) s.term_budget = *o.budget_terms;
    return s;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct Outcome {
    json result = json::object();
    std::vector<std::string> failures;
    std::optional<Table> table;

    void require(bool holds, const std::string& what) {
        if (!holds) failures.push_back(what);
    }
};

// ---- shared helpers -----------------------------------------------------------

template <class F>
bool vec_close(const Vec<F>& a, const Vec<F>& b, const Settings& s) {
    if (a.size() != b.size()) return false;
    if constexpr (is_exact_v<F>)
        return a == b;
    else
        return norm2(a - b) <= s.check_tol * std::max(1.0, norm2(b));
}

template <class F>
bool mat_close(const Matrix<F>& a, const Matrix<F>& b, const Settings& s) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    if constexpr (is_exact_v<F>)
        return a == b;
    else
        return (a - b).max_abs() <= s.check_tol * std::max(1.0, b.max_abs());
}

template <class F>
bool residual_ok(double residual, const Settings& s) {
    return is_exact_v<F> ? residual == 0.0 : residual <= s.check_tol;
}

template <class F>
Vec<F> random_rhs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Vec<F> f(n);
    for (auto& x : f) {
        if constexpr (is_exact_v<F>)
            x = Rational(std::uniform_int_distribution<long>(-5, 5)(rng));
        else
            x = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    }
    return f;
}

template <class F>
json write_polys(const std::vector<DensePoly<F>>& ps) {
    json a = json::array();
    for (const auto& p : ps) a.push_back(io::write(p));
    return a;
}

template <class F>
std::vector<DensePoly<F>> read_polys(const json& j, const std::string& where) {
    std::vector<DensePoly<F>> out;
    const auto& a = io::need_array(j, where);
    for (std::size_t i = 0; i < a.size(); ++i)
        out.push_back(io::read_dense_poly<F>(a[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

template <class F>
Vec<F> read_rhs(const json& j, std::size_t n, const std::string& where) {
    auto f = io::read_vector<F>(j, where);
    if (f.size() != n)
        throw InputError(where + ": has " + std::to_string(f.size()) + " entries, the operator has dimension " +
                         std::to_string(n));
    return f;
}

std::vector<MultiPoly> read_multipolys(const json& j, const std::string& where) {
    std::vector<MultiPoly> out;
    const auto& a = io::need_array(j, where);
    if (a.empty()) throw InputError(where + ": needs at least one polynomial");
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.push_back(io::read_multipoly(a[i], where + "[" + std::to_string(i) + "]"));
        if (out.back().nvars() != out.front().nvars()) throw InputError(where + ": polynomials have mixed nvars");
    }
    return out;
}

// ---- decompose ----------------------------------------------------------------

bool has_complex_scalars(const json& poly) {
    if (!poly.is_object()) return false;
    if (poly.contains("leading") && io::is_complex_scalar(poly["leading"])) return true;
    if (poly.contains("factors") && poly["factors"].is_array())
        for (const auto& f : poly["factors"])
            if (f.is_object() && f.contains("lambda") && io::is_complex_scalar(f["lambda"])) return true;
    return false;
}

template <class F>
json certificate_json(const UnityCertificate<F>& c) {
    return {{"poly", io::write(c.source)},
            {"cofactors", write_polys(c.cofactors)},
            {"complements", write_polys(c.complements)},
            {"groups", c.groups}};
}

// Sum Q_i P^i = 1 with deg Q_i <= p_i - 1, against complements rebuilt from P.
template <class F>
std::optional<std::string> certificate_problem(const FactoredPoly<F>& P, const std::vector<DensePoly<F>>& q,
                                               const Settings& s) {
    if (q.size() != P.factors.size())
        return "certificate has " + std::to_string(q.size()) + " cofactors for " + std::to_string(P.factors.size()) +
               " factors";
    DensePoly<F> sum;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (q[i].degree() > static_cast<long>(P.factors[i].multiplicity) - 1)
            return "deg Q_" + std::to_string(i) + " exceeds p_" + std::to_string(i) + " - 1";
        sum += q[i] * P.complement(i);
    }
    const bool one = is_exact_v<F> ? sum == DensePoly<F>::one() : poly_near(sum, DensePoly<F>::one(), Tolerance{s.check_tol});
    if (!one) return "sum Q_i P^i differs from 1";
    return std::nullopt;
}

template <class F>
json projector_report(const OperatorDecomposition<F>& dec, const Settings& s, Outcome& o) {
    const auto& d = dec.base();
    const auto& P = dec.poly();
    const std::size_t n = d.dim();
    const auto tol = s.tol();
    std::vector<std::size_t> dims;
    std::vector<Vec<F>> cap;
    std::size_t total = 0;
    for (std::size_t i = 0; i < P.factors.size(); ++i) {
        const auto m = poly_matrix(d, P.factor_poly(i));
        dims.push_back(null_space(m, tol).size());
        total += dims.back();
        const auto cs = column_space(m, tol);
        cap = i == 0 ? cs : intersect_subspaces(cap, cs, n, tol);
    }
    const std::size_t null_dim = null_space(poly_matrix(d, P.monic_expand()), tol).size();
    json r = {{"dim", n},
              {"null_dims", dims},
              {"null_dim", null_dim},
              {"range_dim", n - null_dim},
              {"range_intersection_dim", cap.size()}};
    r["direct_sum"] = null_dim == total;
    r["ranges_agree"] = n - null_dim == cap.size();
    o.require(null_dim == total, "dim N(P) differs from the sum of dim N(P_i)");
    o.require(n - null_dim == cap.size(), "dim R(P) differs from dim of the intersection of the R(P_i)");
    if (n > kMaxMaterializedDim) {
        r["projectors"] = "not materialized for n > " + std::to_string(kMaxMaterializedDim);
        return r;
    }
    std::vector<Matrix<F>> pr;
    for (std::size_t i = 0; i < P.factors.size(); ++i) pr.push_back(dec.projector_matrix(i));
    bool idem = true, orth = true;
    Matrix<F> sum(n, n);
    for (std::size_t i = 0; i < pr.size(); ++i) {
        idem = idem && mat_close(pr[i] * pr[i], pr[i], s);
        for (std::size_t j = 0; j < pr.size(); ++j)
            if (i != j) orth = orth && mat_close(pr[i] * pr[j], Matrix<F>(n, n), s);
        sum = sum + pr[i];
    }
    const bool ident = mat_close(sum, Matrix<F>::identity(n), s);
    r["idempotent"] = idem;
    r["orthogonal"] = orth;
    r["sum_identity"] = ident;
    json mats = json::array();
    for (const auto& m : pr) mats.push_back(io::write(m));
    r["projectors"] = mats;
    o.require(idem, "a projector is not idempotent");
    o.require(orth, "projectors are not mutually annihilating");
    o.require(ident, "projectors do not sum to the identity");
    return r;
}

template <class F>
Outcome cmd_decompose(const json& in, const Settings& s) {
    io::allow_keys(in, {"poly", "operator", "real"}, "input");
    const auto P = io::read_factored<F>(io::need(in, "poly", "input"), "poly");
    const auto cert = partition_of_unity(P, s.tol());
    Outcome o;
    o.result["certificate"] = certificate_json(cert);
    if (const auto e = certificate_problem(P, cert.cofactors, s)) o.failures.push_back(*e);
    if (in.contains("real")) {
        if (!in["real"].is_boolean()) throw InputError("input.real: expected a boolean");
        if (in["real"].get<bool>()) {
            if constexpr (std::is_same_v<F, GaussRational>) {
                const auto rc = real_partition(P);
                o.result["real_certificate"] = certificate_json(rc);
                o.require(certificate_holds(rc), "real-grouped certificate does not sum to 1");
            } else {
                throw InputError("input.real: real grouping needs exact mode with complex roots");
            }
        }
    }
    if (in.contains("operator")) {
        if constexpr (is_complex_v<F>) {
            throw InputError("input.operator: operators are supported for real factor roots only");
        } else {
            const auto d = io::read_operator<F>(in["operator"], "operator");
            const auto dec = build_decomposition(d, P, s.tol(), s.check_tol);
            o.result["projectors"] = projector_report(dec, s, o);
        }
    }
    return o;
}

// ---- solve ----------------------------------------------------------------------

template <class F>
std::vector<Vec<F>> factor_solutions(const OperatorDecomposition<F>& dec, const Vec<F>& f, const Settings& s) {
    const F inv = from_int<F>(1) / dec.poly().leading;
    const Vec<F> rhs = scaled(f, inv);
    std::vector<Vec<F>> out;
    for (std::size_t i = 0; i < dec.size(); ++i) {
        const auto x = solve(poly_matrix(dec.base(), dec.poly().factor_poly(i)), rhs, s.tol());
        if (!x) throw MathError("factor equation " + std::to_string(i) + " has no solution");
        out.push_back(*x);
    }
    return out;
}

template <class F>
Outcome cmd_solve(const json& in, const Settings& s) {
    io::allow_keys(in, {"poly", "operator", "f"}, "input");
    const auto P = io::read_factored<F>(io::need(in, "poly", "input"), "poly");
    const auto d = io::read_operator<F>(io::need(in, "operator", "input"), "operator");
    const auto f = read_rhs<F>(io::need(in, "f", "input"), d.dim(), "f");
    const auto dec = build_decomposition(d, P, s.tol(), s.check_tol);
    const auto tuple = factor_solutions(dec, f, s);
    const auto rep = solve_backward(dec, tuple, f);
    const auto back = solve_forward(dec, rep.reconstruction);
    bool inverts = true;
    for (std::size_t i = 0; i < tuple.size(); ++i) inverts = inverts && vec_close(back[i], tuple[i], s);
    Outcome o;
    json comps = json::array();
    for (const auto& c : rep.components) comps.push_back(io::write(c));
    o.result = {{"u", io::write(rep.reconstruction)},
                {"components", comps},
                {"cofactors", write_polys(dec.certificate().cofactors)},
                {"residual", rep.residual},
                {"forward_inverts", inverts}};
    if constexpr (is_exact_v<F>) o.result["exact"] = rep.exact;
    o.require(residual_ok<F>(rep.residual, s), "P u differs from f");
    o.require(inverts, "F(B(tuple)) differs from the tuple");
    return o;
}

// ---- koszul ---------------------------------------------------------------------

template <class F>
struct KoszulInput {
    std::vector<OperatorHandle<F>> ops;
    std::optional<OperatorHandle<F>> base;
    std::vector<DensePoly<F>> polys;
};

template <class F>
KoszulInput<F> read_koszul_family(const json& in) {
    KoszulInput<F> k;
    if (in.contains("operators") == in.contains("base"))
        throw InputError("input: give either \"operators\" or \"base\" with \"polys\"");
    if (in.contains("operators")) {
        if (in.contains("polys")) throw InputError("input.polys: only valid with \"base\"");
        const auto& a = io::need_array(in["operators"], "operators");
        for (std::size_t i = 0; i < a.size(); ++i)
            k.ops.push_back(io::read_operator<F>(a[i], "operators[" + std::to_string(i) + "]"));
    } else {
        k.base = io::read_operator<F>(in["base"], "base");
        k.polys = read_polys<F>(io::need(in, "polys", "input"), "polys");
        for (const auto& p : k.polys) k.ops.push_back(poly_operator(*k.base, p));
    }
    return k;
}

json complex_json(const ComplexReport& r) {
    json g = json::array();
    for (const auto& x : r.grades) g.push_back({{"grade", x.grade}, {"residual", x.residual}, {"holds", x.holds}});
    json out = {{"holds", r.holds}, {"max_residual", r.max_residual}, {"grades", g}};
    if (r.failing_grade) out["failing_grade"] = *r.failing_grade;
    return out;
}

json exactness_json(const ExactnessReport& r) {
    json g = json::array();
    for (const auto& x : r.grades)
        g.push_back({{"grade", x.grade},
                     {"dim", x.dim},
                     {"kernel_dim", x.kernel_dim},
                     {"image_rank", x.image_rank},
                     {"exact", x.exact}});
    return {{"exact_everywhere", r.exact_everywhere}, {"grades", g}};
}

template <class F>
Outcome cmd_koszul(const json& in, const Settings& s) {
    io::allow_keys(in, {"operators", "base", "polys", "homotopy", "f"}, "input");
    const auto fam = read_koszul_family<F>(in);
    Outcome o;
    std::optional<std::vector<OperatorHandle<F>>> hom;
    if (in.contains("homotopy")) {
        const auto& h = in["homotopy"];
        if (h.is_string()) {
            if (h != "auto") throw InputError("input.homotopy: expected \"auto\" or a list of operators");
            if (!fam.base) throw InputError("input.homotopy: \"auto\" needs \"base\" with \"polys\"");
            if constexpr (std::is_same_v<F, Rational>) {
                hom = polynomial_homotopy(*fam.base, fam.polys);
                o.result["homotopy_found"] = hom.has_value();
            } else {
                throw InputError("input.homotopy: \"auto\" needs exact mode");
            }
        } else {
            std::vector<OperatorHandle<F>> q;
            const auto& a = io::need_array(h, "homotopy");
            for (std::size_t i = 0; i < a.size(); ++i)
                q.push_back(io::read_operator<F>(a[i], "homotopy[" + std::to_string(i) + "]"));
            hom = std::move(q);
        }
    }
    const auto kc = build_complex(fam.ops, hom, s.check_tol, true, s.seed);
    o.result["dim"] = kc.dim();
    o.result["size"] = kc.ground().size();
    const auto cr = verify_complex(kc, s.seed);
    o.result["complex"] = complex_json(cr);
    o.require(cr.holds, "P(p+1) P(p) is nonzero");
    bool all_diamonds = true;
    std::string broken;
    if (kc.materializable()) {
        o.result["exactness"] = exactness_json(exactness_by_rank(kc, s.tol(), s.koszul_budget));
        json ds = json::array();
        for (unsigned i = 0; i < kc.ground().size(); ++i)
            for (unsigned j = i + 1; j < kc.ground().size(); ++j) {
                const bool e = diamond_exact(kc, i, j, s.tol(), s.koszul_budget);
                if (!e && all_diamonds) broken = "(" + std::to_string(i) + ", " + std::to_string(j) + ")";
                all_diamonds = all_diamonds && e;
                ds.push_back({{"i", i}, {"j", j}, {"exact", e}});
            }
        o.result["diamonds"] = ds;
    }
    if (hom) {
        const auto hr = verify_homotopy(kc, s.seed);
        o.result["homotopy"] = complex_json(hr);
        o.require(hr.holds, "homotopy identity fails");
    }
    if (in.contains("f")) {
        if (!kc.materializable()) throw InputError("input.f: Q-free reconstruction needs dense or diagonal operators");
        const auto f = read_rhs<F>(in["f"], kc.dim(), "f");
        if (!all_diamonds) {
            o.result["qfree"] = {{"skipped", "diamond " + broken + " is not exact"}};
        } else {
            std::vector<Vec<F>> tuple;
            for (std::size_t i = 0; i < fam.ops.size(); ++i) {
                const auto x = solve(fam.ops[i].to_matrix(), f, s.tol());
                if (!x) throw MathError("P_" + std::to_string(i) + " u = f has no solution");
                tuple.push_back(*x);
            }
            const auto q = reconstruct_Qfree(kc, f, tuple, s.tol());
            o.result["qfree"] = {{"u", io::write(q.u)}, {"residual", q.residual}};
            if constexpr (is_exact_v<F>) o.result["qfree"]["exact"] = q.exact;
            o.require(residual_ok<F>(q.residual, s), "Q-free reconstruction misses P u = f");
        }
    }
    return o;
}

// ---- certify --------------------------------------------------------------------

json ideal_json(const IdealCertificate& c) {
    json gens = json::array(), cof = json::array();
    for (const auto& g : c.generators) gens.push_back(io::write(g));
    for (const auto& q : c.cofactors) cof.push_back(io::write(q));
    return {{"status", c.is_unit() ? "unit" : "not-unit"},
            {"generators", gens},
            {"cofactors", cof},
            {"verified", c.is_unit() && certificate_verifies(c)}};
}

Outcome cmd_certify(const json& in, const Settings& s) {
    if (!s.exact) throw InputError("certify runs in exact mode only");
    io::allow_keys(in, {"generators", "factors", "beta"}, "input");
    Outcome o;
    if (in.contains("generators")) {
        if (in.contains("factors") || in.contains("beta"))
            throw InputError("input: give either \"generators\" or \"factors\" with \"beta\"");
        const auto c = unit_certificate(read_multipolys(in["generators"], "generators"), s.groebner());
        o.result["certificate"] = ideal_json(c);
        o.require(c.is_unit(), "the generators do not span the unit ideal");
        o.require(!c.is_unit() || certificate_verifies(c), "cofactors do not re-expand to 1");
        return o;
    }
    const auto factors = read_multipolys(io::need(in, "factors", "input"), "factors");
    const auto beta = io::read_alpha(io::need(in, "beta", "input"), "beta");
    if (beta.ground().size() != factors.size()) throw InputError("beta: |L| differs from the number of factors");
    const auto rep = certify_beta_decomposition(factors, beta, s.groebner());
    json certs = json::array();
    for (const auto& [j, c] : rep.certificates) {
        json e = ideal_json(c);
        e["J"] = io::write_mask(j);
        certs.push_back(std::move(e));
        o.require(!c.is_unit() || certificate_verifies(c), "cofactors for J = " + mask_to_string(j) + " do not re-expand to 1");
        o.require(c.is_unit(), "J = " + mask_to_string(j) + " does not span the unit ideal");
    }
    o.result["beta"] = io::write(beta);
    o.result["certificates"] = certs;
    o.result["all_unit"] = rep.all_unit;
    return o;
}

// ---- gjms -----------------------------------------------------------------------

template <class F>
struct GJMSInput {
    GJMSSpec<F> spec;
    SpectralModel<F> model;
};

template <class F>
GJMSInput<F> read_gjms(const json& in) {
    const long n = io::as_int(io::need(in, "n", "input"), "n");
    const long k = io::as_int(io::need(in, "k", "input"), "k");
    if (n < 3) throw InputError("n: GJMS operators need n >= 3");
    if (k < 1) throw InputError("k: must be at least 1");
    const auto co = gjms_coefficients(static_cast<unsigned>(n), static_cast<unsigned>(k));
    const auto& mj = io::need(in, "model", "input");
    io::allow_keys(mj, {"entries", "preset", "l_max"}, "model");
    SpectralModel<F> model;
    if (mj.contains("entries")) {
        if (mj.contains("preset") || mj.contains("l_max")) throw InputError("model: give either entries or a preset");
        model.n = static_cast<unsigned>(n);
        model.entries = io::read_entries<F>(mj["entries"], "model.entries");
    } else {
        const auto& p = io::need(mj, "preset", "model");
        if (p != "unit-sphere") throw InputError("model.preset: only \"unit-sphere\" is available");
        const std::size_t l_max = io::as_size(io::need(mj, "l_max", "model"), "model.l_max");
        model = unit_sphere_model<F>(static_cast<unsigned>(n), static_cast<unsigned>(l_max));
    }
    F sc;
    if (in.contains("Sc")) {
        sc = io::read_scalar<F>(in["Sc"], "Sc");
        if (model.preset && !detail::scalar_near(sc, unit_sphere_curvature<F>(static_cast<unsigned>(n)), 0.0))
            throw InputError("Sc: the unit-sphere preset has Sc = n(n-1)");
    } else if (model.preset) {
        sc = unit_sphere_curvature<F>(static_cast<unsigned>(n));
    } else {
        throw InputError("input: missing field \"Sc\"");
    }
    return {{co, sc}, model};
}

template <class F>
Vec<F> gjms_rhs(const json& in, std::size_t n, const Settings& s) {
    if (in.contains("f")) return read_rhs<F>(in["f"], n, "f");
    return random_rhs<F>(n, s.seed);
}

template <class F>
Table gjms_table(const GJMSInput<F>& g, const GJMSOperator<F>& op, const Vec<F>& f, const Vec<F>& u) {
    Table t{{"entry", "laplacian", "multiplicity", "y", "pk", "max_error", "max_residual"}, {}};
    std::size_t c = 0;
    for (std::size_t e = 0; e < g.model.entries.size(); ++e) {
        const F pk = op.pk.entries()[e].eigenvalue;
        double err = 0.0, res = 0.0;
        bool singular = is_zero(pk, 0.0);
        for (std::size_t m = 0; m < g.model.entries[e].multiplicity; ++m, ++c) {
            res = std::max(res, magnitude(F(pk * u[c] - f[c])));
            if (!singular) err = std::max(err, magnitude(F(u[c] - f[c] / pk)));
        }
        t.rows.push_back({std::to_string(e), to_string(g.model.entries[e].eigenvalue),
                          std::to_string(g.model.entries[e].multiplicity), to_string(op.y.entries()[e].eigenvalue),
                          to_string(pk), singular ? std::string("singular") : to_string(err), to_string(res)});
    }
    return t;
}

template <class F>
Outcome cmd_gjms(const json& in, const Settings& s) {
    io::allow_keys(in, {"n", "k", "Sc", "model", "f", "mu"}, "input");
    const auto g = read_gjms<F>(in);
    const auto op = gjms_operator(g.spec, g.model, s.check_tol);
    Outcome o;
    json c = json::array(), b = json::array();
    for (const auto& x : g.spec.coeffs.c) c.push_back(io::write(x));
    for (const auto& x : g.spec.coeffs.b) b.push_back(io::write(x));
    o.result["coefficients"] = {{"c", c}, {"b", b}};
    o.result["operator"] = {{"dim", g.model.dim()},
                            {"form_mismatch", op.form_mismatch},
                            {"y_factors", io::write(op.in_y)}};
    const auto ns = gjms_nullspace(g.spec, g.model, s.tol());
    json comps = json::array();
    for (const auto& x : ns.components)
        comps.push_back({{"index", x.index}, {"y_eigenvalue", x.y_eigenvalue}, {"entries", x.entries}, {"dimension", x.dimension}});
    o.result["nullspace"] = {{"components", comps},
                             {"total_dimension", ns.total_dimension},
                             {"direct_dimension", ns.direct_dimension},
                             {"consistent", ns.consistent},
                             {"flat", ns.flat}};
    o.require(ns.consistent, "null-space dimension differs from the zeros of P_k");
    if (!is_zero(g.spec.sc, 0.0) || in.contains("f")) {
        const auto f = gjms_rhs<F>(in, g.model.dim(), s);
        const auto rep = gjms_solve(g.spec, g.model, f, s.check_tol);
        json sv = {{"f_source", in.contains("f") ? "input" : "random"},
                   {"u", io::write(rep.solve.reconstruction)},
                   {"residual", rep.solve.residual},
                   {"direct_error", rep.direct_error},
                   {"cofactors", io::write(rep.cofactors)},
                   {"printed_coefficients", io::write(rep.printed_coefficients)},
                   {"printed_matches", rep.printed_matches},
                   {"printed_matches_up_to_sign", rep.printed_matches_up_to_sign},
                   {"printed_residual", rep.printed_residual}};
        if constexpr (is_exact_v<F>) sv["exact"] = rep.solve.exact;
        o.result["solve"] = sv;
        o.require(residual_ok<F>(rep.solve.residual, s), "P_k u differs from f");
        o.require(residual_ok<F>(rep.direct_error, s), "solution differs from direct diagonal division");
        o.table = gjms_table(g, op, f, rep.solve.reconstruction);
    } else {
        o.result["solve"] = {{"skipped", "Sc = 0: the factors coincide"}};
    }
    if (in.contains("mu")) {
        const F mu = io::read_scalar<F>(in["mu"], "mu");
        const auto er = gjms_eigenstructure(g.spec, g.model, mu);
        json ec = json::array();
        for (const auto& x : er.components)
            ec.push_back({{"y_root", x.y_root}, {"multiplicity", x.multiplicity}, {"entries", x.entries}, {"dimension", x.dimension}});
        o.result["eigenspaces"] = {{"mu", io::write(mu)},
                                   {"components", ec},
                                   {"total_dimension", er.total_dimension},
                                   {"direct_dimension", er.direct_dimension},
                                   {"consistent", er.consistent}};
        o.require(er.consistent, "eigenspace dimension differs from the entries with P_k = mu");
    }
    return o;
}

// ---- verify ---------------------------------------------------------------------

struct Checks {
    json list = json::array();
    Outcome* o;

    void operator()(const std::string& name, bool holds) {
        list.push_back({{"name", name}, {"holds", holds}});
        o->require(holds, name);
    }
};

template <class F>
void verify_decompose(const json& in, const json& res, const Settings& s, Checks& check) {
    const auto P = io::read_factored<F>(io::need(in, "poly", "input"), "input.poly");
    const auto& cert = io::need(res, "certificate", "result");
    const auto q = read_polys<F>(io::need(cert, "cofactors", "result.certificate"), "result.certificate.cofactors");
    const auto problem = certificate_problem(P, q, s);
    check("sum Q_i P^i = 1 with deg Q_i <= p_i - 1", !problem);
    const auto comp = read_polys<F>(io::need(cert, "complements", "result.certificate"), "result.certificate.complements");
    bool same = comp.size() == P.factors.size();
    for (std::size_t i = 0; same && i < comp.size(); ++i) same = comp[i] == P.complement(i);
    check("complements match the factored polynomial", same);
    if (res.contains("real_certificate")) {
        const auto& rc = res["real_certificate"];
        const auto rq = read_polys<F>(io::need(rc, "cofactors", "result.real_certificate"), "real_certificate.cofactors");
        const auto rp = read_polys<F>(io::need(rc, "complements", "result.real_certificate"), "real_certificate.complements");
        DensePoly<F> sum;
        for (std::size_t i = 0; i < std::min(rq.size(), rp.size()); ++i) sum += rq[i] * rp[i];
        check("real-grouped certificate sums to 1", rq.size() == rp.size() && sum == DensePoly<F>::one());
    }
    if (!in.contains("operator")) return;
    if constexpr (!is_complex_v<F>) {
        const auto d = io::read_operator<F>(in["operator"], "input.operator");
        std::mt19937_64 rng(s.seed);
        bool ident = true;
        for (int t = 0; t < 4 && !problem; ++t) {
            const auto v = random_vector<F>(rng, d.dim());
            Vec<F> acc = zeros<F>(d.dim());
            for (std::size_t i = 0; i < q.size(); ++i) acc = acc + apply_poly(d, q[i] * P.complement(i), v);
            ident = ident && vec_close(acc, v, s);
        }
        check("sum Q_i[D] P^i[D] = id on random vectors", ident && !problem);
        const auto& pr = io::need(res, "projectors", "result");
        if (pr.contains("projectors") && pr["projectors"].is_array() && !problem) {
            bool match = pr["projectors"].size() == q.size();
            for (std::size_t i = 0; match && i < q.size(); ++i)
                match = mat_close(io::read_matrix<F>(pr["projectors"][i], "result.projectors"),
                                  poly_matrix(d, q[i] * P.complement(i)), s);
            check("emitted projectors equal Q_i[D] P^i[D]", match);
        }
    }
}

template <class F>
void verify_solve(const json& in, const json& res, const Settings& s, Checks& check) {
    const auto P = io::read_factored<F>(io::need(in, "poly", "input"), "input.poly");
    const auto d = io::read_operator<F>(io::need(in, "operator", "input"), "input.operator");
    const auto f = read_rhs<F>(io::need(in, "f", "input"), d.dim(), "input.f");
    const auto u = read_rhs<F>(io::need(res, "u", "result"), d.dim(), "result.u");
    check("P[D] u = f", vec_close(apply_poly(d, P.expand(), u), f, s));
    const auto& cj = io::need_array(io::need(res, "components", "result"), "result.components");
    const auto q = read_polys<F>(io::need(res, "cofactors", "result"), "result.cofactors");
    check("cofactors form a partition of unity", !certificate_problem(P, q, s));
    const F inv = from_int<F>(1) / P.leading;
    bool factors = cj.size() == P.factors.size() && q.size() == P.factors.size();
    Vec<F> back = zeros<F>(d.dim());
    for (std::size_t i = 0; factors && i < cj.size(); ++i) {
        const auto ui = read_rhs<F>(cj[i], d.dim(), "result.components");
        factors = vec_close(apply_poly(d, P.factor_poly(i), ui), scaled(f, inv), s);
        back = back + apply_poly(d, q[i], ui);
    }
    check("components solve their factor equations", factors);
    check("u = sum Q_i[D] u_i", factors && vec_close(back, u, s));
}

template <class F>
void verify_koszul(const json& in, const json& res, const Settings& s, Checks& check) {
    const auto fam = read_koszul_family<F>(in);
    std::optional<std::vector<OperatorHandle<F>>> hom;
    if (in.contains("homotopy") && !in["homotopy"].is_string()) {
        std::vector<OperatorHandle<F>> q;
        for (const auto& h : io::need_array(in["homotopy"], "input.homotopy")) q.push_back(io::read_operator<F>(h, "input.homotopy"));
        hom = std::move(q);
    } else if (in.contains("homotopy")) {
        if constexpr (std::is_same_v<F, Rational>) {
            if (fam.base) hom = polynomial_homotopy(*fam.base, fam.polys);
        }
    }
    const auto kc = build_complex(fam.ops, hom, s.check_tol, true, s.seed);
    const auto cr = verify_complex(kc, s.seed);
    check("P(p+1) P(p) = 0 at every grade", cr.holds);
    const auto& rc = io::need(res, "complex", "result");
    check("reported complex verdict matches", rc.contains("holds") && rc["holds"] == cr.holds);
    if (res.contains("exactness") && kc.materializable()) {
        const auto er = exactness_by_rank(kc, s.tol(), s.koszul_budget);
        const auto& g = io::need_array(io::need(res["exactness"], "grades", "result.exactness"), "result.exactness.grades");
        bool same = g.size() == er.grades.size();
        for (std::size_t p = 0; same && p < g.size(); ++p)
            same = g[p].value("kernel_dim", std::size_t{0}) == er.grades[p].kernel_dim &&
                   g[p].value("image_rank", std::size_t{0}) == er.grades[p].image_rank;
        check("reported kernel dimensions and ranks match", same);
    }
    if (res.contains("homotopy") && hom) {
        const auto hr = verify_homotopy(kc, s.seed);
        check("homotopy identity at every grade", hr.holds);
    }
    if (res.contains("qfree") && res["qfree"].contains("u")) {
        const auto f = read_rhs<F>(io::need(in, "f", "input"), kc.dim(), "input.f");
        Vec<F> pu = read_rhs<F>(res["qfree"]["u"], kc.dim(), "result.qfree.u");
        for (const auto& op : fam.ops) pu = op(pu);
        check("Q-free u satisfies P u = f", vec_close(pu, f, s));
    }
}

void verify_certify(const json& in, const json& res, const Settings& s, Checks& check) {
    auto audit = [&](const std::vector<MultiPoly>& gens, const json& c, const std::string& label) {
        const std::string status = c.value("status", std::string());
        if (status == "unit") {
            std::vector<MultiPoly> cof;
            for (const auto& q : io::need_array(io::need(c, "cofactors", label), label + ".cofactors"))
                cof.push_back(io::read_multipoly(q, label + ".cofactors"));
            IdealCertificate cert{gens, cof, IdealStatus::Unit};
            check(label + ": cofactors re-expand to 1", cof.size() == gens.size() && certificate_verifies(cert));
        } else {
            check(label + ": recomputed status is not-unit", !unit_certificate(gens, s.groebner()).is_unit());
        }
    };
    if (in.contains("generators")) {
        audit(read_multipolys(in["generators"], "input.generators"), io::need(res, "certificate", "result"), "certificate");
        return;
    }
    const auto factors = read_multipolys(io::need(in, "factors", "input"), "input.factors");
    const auto beta = io::read_alpha(io::need(in, "beta", "input"), "input.beta");
    const auto& certs = io::need_array(io::need(res, "certificates", "result"), "result.certificates");
    check("one certificate per member of beta", certs.size() == beta.size());
    for (const auto& c : certs) {
        std::vector<unsigned> idx;
        for (const auto& x : io::need_array(io::need(c, "J", "certificate"), "certificate.J"))
            idx.push_back(static_cast<unsigned>(io::as_size(x, "certificate.J")));
        const Mask j = mask_of(idx);
        audit(select_generators(factors, j), c, "J = " + mask_to_string(j));
    }
}

template <class F>
void verify_gjms(const json& in, const json& res, const Settings& s, Checks& check) {
    const auto g = read_gjms<F>(in);
    const auto& co = io::need(res, "coefficients", "result");
    const auto& c = io::need_array(io::need(co, "c", "result.coefficients"), "result.coefficients.c");
    const auto& b = io::need_array(io::need(co, "b", "result.coefficients"), "result.coefficients.b");
    bool same = c.size() == g.spec.coeffs.k && b.size() == g.spec.coeffs.k;
    for (std::size_t i = 0; same && i < c.size(); ++i)
        same = io::read_rational(c[i], "c") == g.spec.coeffs.c[i] && io::read_rational(b[i], "b") == g.spec.coeffs.b[i];
    check("reported c_i and b_i match the closed forms", same);
    const auto op = gjms_operator(g.spec, g.model, s.check_tol);
    const auto ns = gjms_nullspace(g.spec, g.model, s.tol());
    check("null-space dimension matches",
          io::need(res, "nullspace", "result").value("total_dimension", std::size_t{0}) == ns.total_dimension);
    const auto& sv = io::need(res, "solve", "result");
    if (!sv.contains("u")) return;
    const std::size_t n = g.model.dim();
    const auto f = gjms_rhs<F>(in, n, s);
    const auto u = read_rhs<F>(sv["u"], n, "result.solve.u");
    check("P_k u = f", vec_close(op.pk(u), f, s));
    const auto q = io::read_vector<F>(io::need(sv, "cofactors", "result.solve"), "result.solve.cofactors");
    DensePoly<F> sum;
    for (std::size_t i = 0; i < q.size(); ++i) sum += DensePoly<F>::constant(q[i]) * op.in_y.complement(i);
    const bool one = is_exact_v<F> ? sum == DensePoly<F>::one() : poly_near(sum, DensePoly<F>::one(), Tolerance{s.check_tol});
    check("sum Q_i prod_{j != i} (Y + b_j Sc) = 1", q.size() == g.spec.coeffs.k && one);
}

// ---- dispatch -------------------------------------------------------------------

template <class Fn>
Outcome with_real_field(const Settings& s, Fn&& fn) {
    return s.exact ? fn(Rational{}) : fn(double{});
}

Outcome dispatch(const std::string& cmd, const json& in, const Settings& s) {
    if (cmd == "decompose") {
        const bool cx = in.is_object() && in.contains("poly") && has_complex_scalars(in["poly"]);
        if (s.exact) return cx ? cmd_decompose<GaussRational>(in, s) : cmd_decompose<Rational>(in, s);
        return cx ? cmd_decompose<Complex>(in, s) : cmd_decompose<double>(in, s);
    }
    if (cmd == "solve") return with_real_field(s, [&](auto t) { return cmd_solve<decltype(t)>(in, s); });
    if (cmd == "koszul") return with_real_field(s, [&](auto t) { return cmd_koszul<decltype(t)>(in, s); });
    if (cmd == "certify") return cmd_certify(in, s);
    if (cmd == "gjms") return with_real_field(s, [&](auto t) { return cmd_gjms<decltype(t)>(in, s); });
    throw InputError("unknown command " + cmd);
}

Outcome verify(const json& env, const Overrides& ov) {
    io::allow_keys(env, {"command", "config", "input", "result", "status", "failures"}, "report");
    const auto& cj = io::need(env, "command", "report");
    if (!cj.is_string()) throw InputError("report.command: expected a string");
    const std::string cmd = cj.get<std::string>();
    const Settings s = resolve(env.contains("config") ? &env["config"] : nullptr, ov);
    const auto& in = io::need(env, "input", "report");
    const auto& res = io::need(env, "result", "report");
    io::require_object(in, "report.input");
    io::require_object(res, "report.result");
    Outcome o;
    Checks check{json::array(), &o};
    if (cmd == "decompose") {
        const bool cx = in.contains("poly") && has_complex_scalars(in["poly"]);
        if (s.exact) {
            if (cx) verify_decompose<GaussRational>(in, res, s, check);
            else verify_decompose<Rational>(in, res, s, check);
        } else {
            if (cx) verify_decompose<Complex>(in, res, s, check);
            else verify_decompose<double>(in, res, s, check);
        }
    } else if (cmd == "solve" || cmd == "koszul" || cmd == "gjms") {
        auto run = [&](auto t) {
            using F = decltype(t);
            if (cmd == "solve") verify_solve<F>(in, res, s, check);
            else if (cmd == "koszul") verify_koszul<F>(in, res, s, check);
            else verify_gjms<F>(in, res, s, check);
        };
        if (s.exact) run(Rational{});
        else run(double{});
    } else if (cmd == "certify") {
        verify_certify(in, res, s, check);
    } else {
        throw InputError("report.command: cannot verify \"" + cmd + "\"");
    }
    const std::string status = env.value("status", std::string("ok"));
    o.result = {{"verified", cmd}, {"reported_status", status}, {"checks", check.list}};
    o.result["config"] = s.to_json();
    return o;
}

// ---- output ---------------------------------------------------------------------

std::string scalar_text(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    return j.dump();
}

bool is_rational_object(const json& j) {
    return j.is_object() && j.size() == 2 && j.contains("num") && j.contains("den") && !j["num"].is_object();
}

void flatten(const json& j, const std::string& path, Table& t) {
    if (is_rational_object(j)) {
        t.rows.push_back({path, scalar_text(j["num"]) + "/" + scalar_text(j["den"])});
    } else if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, path.empty() ? k : path + "." + k, t);
    } else if (j.is_array()) {
        if (j.empty()) t.rows.push_back({path, "[]"});
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], path + "[" + std::to_string(i) + "]", t);
    } else {
        t.rows.push_back({path, scalar_text(j)});
    }
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void print_table(const Table& t, std::ostream& out) {
    auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << csv_field(r[i]);
        out << "\n";
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

json load(const std::string& file) {
    std::string text;
    if (file == "-") {
        std::ostringstream ss;
        ss << std::cin.rdbuf();
        text = ss.str();
    } else {
        std::ifstream in(file);
        if (!in) throw InputError("cannot open " + file);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(file + ": " + e.what());
    }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"opkit: operator decompositions with certificates"};
    std::string command, file, mode, output;
    double epsilon = 0;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    bool table = false;
    app.add_option("command", command, "decompose | solve | koszul | certify | gjms | verify")
        ->required()
        ->check(CLI::IsMember({"decompose", "solve", "koszul", "certify", "gjms", "verify"}));
    app.add_option("file", file, "problem file (JSON), or - for stdin")->required();
    auto* mode_opt = app.add_option("--mode", mode, "exact | float")->check(CLI::IsMember({"exact", "float"}));
    auto* eps_opt = app.add_option("--epsilon", epsilon, "float-mode relative tolerance")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "seed for randomized checks");
    auto* budget_opt = app.add_option("--budget-terms", budget, "Groebner term budget")->check(CLI::PositiveNumber);
    app.add_flag("--table", table, "CSV table instead of JSON");
    app.add_option("-o,--output", output, "write to a file instead of stdout");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    Overrides ov;
    if (*mode_opt) ov.mode = mode;
    if (*eps_opt) ov.epsilon = epsilon;
    if (*seed_opt) ov.seed = seed;
    if (*budget_opt) ov.budget_terms = budget;
    try {
        const json doc = load(file);
        json envelope;
        Outcome o;
        if (command == "verify") {
            o = verify(doc, ov);
            envelope = {{"command", "verify"}, {"result", o.result}};
        } else {
            io::require_object(doc, "input");
            const Settings s = resolve(doc.contains("config") ? &doc["config"] : nullptr, ov);
            json payload = doc;
            payload.erase("config");
            o = dispatch(command, payload, s);
            envelope = {{"command", command}, {"config", s.to_json()}, {"input", payload}, {"result", o.result}};
        }
        envelope["status"] = o.failures.empty() ? "ok" : "failed";
        if (!o.failures.empty()) envelope["failures"] = o.failures;
        std::ofstream fout;
        if (!output.empty()) {
            fout.open(output);
            if (!fout) throw InputError("cannot write " + output);
        }
        std::ostream& dst = output.empty() ? out : fout;
        if (table) {
            Table t = o.table ? *o.table : Table{{"field", "value"}, {}};
            if (!o.table) flatten(envelope["result"], "", t);
            print_table(t, dst);
        } else {
            dst << envelope.dump(2) << "\n";
        }
        for (const auto& f : o.failures) err << "failed: " << f << "\n";
        return o.failures.empty() ? 0 : 1;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return 2;
    } catch (const MathError& e) {
        err << "math error: " << e.what() << "\n";
        return 1;
    } catch (const BudgetError& e) {
        err << "budget exceeded: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        err << "input error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace opkit::cli
