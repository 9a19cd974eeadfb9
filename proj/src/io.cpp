#include "opkit/io.hpp"

#include <cmath>
#include <limits>

namespace opkit::io {

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": expected an object");
}

void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
    require_object(j, where);
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const char* a : keys) known = known || k == a;
        if (!known) throw InputError(where + ": unknown field \"" + k + "\"");
    }
}

const json& need(const json& j, const char* key, const std::string& where) {
    require_object(j, where);
    if (!j.contains(key)) throw InputError(where + ": missing field \"" + key + "\"");
    return j[key];
}

const json& need_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw InputError(where + ": expected an array");
    return j;
}

long as_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) throw InputError(where + ": expected an integer");
    return j.get<long>();
}

std::size_t as_size(const json& j, const std::string& where) {
    const long v = as_int(j, where);
    if (v < 0) throw InputError(where + ": expected a nonnegative integer");
    return static_cast<std::size_t>(v);
}

namespace {

mpz_class read_integer(const json& j, const std::string& where) {
    if (j.is_number_integer()) {
        if (j.is_number_unsigned()) return mpz_class(std::to_string(j.get<unsigned long long>()));
        return mpz_class(std::to_string(j.get<long long>()));
    }
    if (j.is_string()) {
        mpz_class z;
        if (z.set_str(j.get<std::string>(), 10) != 0) throw InputError(where + ": malformed integer string");
        return z;
    }
    throw InputError(where + ": expected an integer");
}

json integer_json(const mpz_class& z) {
    if (z.fits_slong_p()) return z.get_si();
    return z.get_str();
}

}  // namespace

bool is_complex_scalar(const json& j) { return j.is_object() && (j.contains("re") || j.contains("im")); }

Rational read_rational(const json& j, const std::string& where, bool allow_float) {
    if (j.is_number_integer() || j.is_string()) return Rational(read_integer(j, where));
    if (j.is_number_float()) {
        if (!allow_float) throw InputError(where + ": float scalar in exact mode");
        const double d = j.get<double>();
        if (!std::isfinite(d)) throw InputError(where + ": non-finite scalar");
        return Rational(d);
    }
    if (j.is_object()) {
        allow_keys(j, {"num", "den"}, where);
        const mpz_class num = read_integer(need(j, "num", where), where + ".num");
        const mpz_class den = j.contains("den") ? read_integer(j["den"], where + ".den") : mpz_class(1);
        if (den == 0) throw InputError(where + ": zero denominator");
        Rational q(num, den);
        q.canonicalize();
        return q;
    }
    throw InputError(where + ": expected a scalar");
}

json write(const Rational& x) {
    if (x.get_den() == 1) return integer_json(x.get_num());
    return {{"num", integer_json(x.get_num())}, {"den", integer_json(x.get_den())}};
}

json write(double x) {
    if (!std::isfinite(x)) return to_string(x);
    return x;
}

json write(const GaussRational& x) {
    if (x.is_real()) return write(x.re());
    return {{"re", write(x.re())}, {"im", write(x.im())}};
}

json write(const Complex& x) { return {{"re", write(x.real())}, {"im", write(x.imag())}}; }

MultiPoly read_multipoly(const json& j, const std::string& where) {
    allow_keys(j, {"nvars", "terms"}, where);
    const long k = as_int(need(j, "nvars", where), where + ".nvars");
    if (k < 1) throw InputError(where + ".nvars: must be positive");
    MultiPoly p(static_cast<unsigned>(k));
    const auto& ts = need_array(need(j, "terms", where), where + ".terms");
    for (std::size_t t = 0; t < ts.size(); ++t) {
        const std::string w = where + ".terms[" + std::to_string(t) + "]";
        allow_keys(ts[t], {"exp", "num", "den"}, w);
        const auto& ex = need_array(need(ts[t], "exp", w), w + ".exp");
        if (ex.size() != static_cast<std::size_t>(k)) throw InputError(w + ".exp: expected " + std::to_string(k) + " exponents");
        Exponent e;
        for (std::size_t v = 0; v < ex.size(); ++v) e.push_back(static_cast<unsigned>(as_size(ex[v], w + ".exp")));
        json coeff = {{"num", need(ts[t], "num", w)}};
        if (ts[t].contains("den")) coeff["den"] = ts[t]["den"];
        p.add_term(e, read_rational(coeff, w));
    }
    return p;
}

json write(const MultiPoly& p) {
    json ts = json::array();
    for (const auto& [e, c] : p.terms())
        ts.push_back({{"exp", e}, {"num", integer_json(c.get_num())}, {"den", integer_json(c.get_den())}});
    return {{"nvars", p.nvars()}, {"terms", ts}};
}

AlphaSystem read_alpha(const json& j, const std::string& where) {
    allow_keys(j, {"ell", "members"}, where);
    const long ell = as_int(need(j, "ell", where), where + ".ell");
    if (ell < 0 || ell + 1 > static_cast<long>(kMaxIndexSetSize)) throw InputError(where + ".ell: out of range");
    std::vector<std::vector<unsigned>> lists;
    const auto& ms = need_array(need(j, "members", where), where + ".members");
    for (std::size_t m = 0; m < ms.size(); ++m) {
        std::vector<unsigned> l;
        for (const auto& x : need_array(ms[m], where + ".members")) {
            const std::size_t i = as_size(x, where + ".members[" + std::to_string(m) + "]");
            if (i > static_cast<std::size_t>(ell))
                throw InputError(where + ".members[" + std::to_string(m) + "]: index " + std::to_string(i) +
                                 " outside L");
            l.push_back(static_cast<unsigned>(i));
        }
        lists.push_back(std::move(l));
    }
    return AlphaSystem::from_lists(static_cast<unsigned>(ell), lists);
}

json write_mask(Mask m) { return mask_indices(m); }

json write(const AlphaSystem& a) {
    json ms = json::array();
    for (Mask m : a.members()) ms.push_back(write_mask(m));
    return {{"ell", a.ground().ell}, {"members", ms}};
}

}  // namespace opkit::io
