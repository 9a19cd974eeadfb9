#pragma once

// JSON encodings of the opkit types. Every object reader rejects fields it
// does not know; errors are InputError and name the offending location.

#include "opkit/errors.hpp"
#include "opkit/field.hpp"
#include "opkit/matrix.hpp"
#include "opkit/mpoly.hpp"
#include "opkit/operator.hpp"
#include "opkit/poly.hpp"
#include "opkit/posets.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>
#include <vector>

namespace opkit::io {

using json = nlohmann::json;

void require_object(const json& j, const std::string& where);
void allow_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where);
const json& need(const json& j, const char* key, const std::string& where);
const json& need_array(const json& j, const std::string& where);
long as_int(const json& j, const std::string& where);
std::size_t as_size(const json& j, const std::string& where);

// Accepts an integer, {"num": int, "den": int} (integers or decimal strings)
// and, when allow_float is set, a JSON float.
Rational read_rational(const json& j, const std::string& where, bool allow_float = false);
bool is_complex_scalar(const json& j);

json write(const Rational& x);
json write(double x);
json write(const GaussRational& x);
json write(const Complex& x);

template <class F>
F read_scalar(const json& j, const std::string& where) {
    if constexpr (std::is_same_v<F, Rational>) {
        if (is_complex_scalar(j)) throw InputError(where + ": complex scalar where a real one is required");
        if (j.is_number_float()) throw InputError(where + ": float scalar in exact mode (use {\"num\", \"den\"})");
        return read_rational(j, where);
    } else if constexpr (std::is_same_v<F, double>) {
        if (is_complex_scalar(j)) throw InputError(where + ": complex scalar where a real one is required");
        return read_rational(j, where, true).get_d();
    } else if constexpr (std::is_same_v<F, GaussRational>) {
        if (!is_complex_scalar(j)) return GaussRational(read_scalar<Rational>(j, where));
        allow_keys(j, {"re", "im"}, where);
        return GaussRational(read_scalar<Rational>(need(j, "re", where), where + ".re"),
                             read_scalar<Rational>(need(j, "im", where), where + ".im"));
    } else {
        if (!is_complex_scalar(j)) return Complex(read_scalar<double>(j, where), 0.0);
        allow_keys(j, {"re", "im"}, where);
        return Complex(read_scalar<double>(need(j, "re", where), where + ".re"),
                       read_scalar<double>(need(j, "im", where), where + ".im"));
    }
}

template <class F>
Vec<F> read_vector(const json& j, const std::string& where) {
    Vec<F> v;
    const auto& a = need_array(j, where);
    for (std::size_t i = 0; i < a.size(); ++i) v.push_back(read_scalar<F>(a[i], where + "[" + std::to_string(i) + "]"));
    return v;
}

template <class F>
json write(const Vec<F>& v) {
    json a = json::array();
    for (const auto& x : v) a.push_back(write(x));
    return a;
}

template <class F>
json write(const DensePoly<F>& p) {
    return write(p.coeffs());
}

template <class F>
DensePoly<F> read_dense_poly(const json& j, const std::string& where) {
    return DensePoly<F>(read_vector<F>(j, where));
}

template <class F>
json write(const Matrix<F>& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (std::size_t k = 0; k < m.cols(); ++k) r.push_back(write(m(i, k)));
        rows.push_back(std::move(r));
    }
    return rows;
}

template <class F>
Matrix<F> read_matrix(const json& j, const std::string& where) {
    const auto& rows = need_array(j, where);
    if (rows.empty()) throw InputError(where + ": matrix has no rows");
    const std::size_t cols = need_array(rows[0], where + "[0]").size();
    Matrix<F> m(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto r = read_vector<F>(rows[i], where + "[" + std::to_string(i) + "]");
        if (r.size() != cols) throw InputError(where + ": ragged matrix at row " + std::to_string(i));
        for (std::size_t k = 0; k < cols; ++k) m(i, k) = r[k];
    }
    return m;
}

// {"leading": scalar, "factors": [{"lambda": scalar, "p": int}]}; leading defaults to 1.
template <class F>
FactoredPoly<F> read_factored(const json& j, const std::string& where) {
    require_object(j, where);
    allow_keys(j, {"leading", "factors"}, where);
    FactoredPoly<F> P;
    if (j.contains("leading")) P.leading = read_scalar<F>(j["leading"], where + ".leading");
    const auto& fs = need_array(need(j, "factors", where), where + ".factors");
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const std::string w = where + ".factors[" + std::to_string(i) + "]";
        require_object(fs[i], w);
        allow_keys(fs[i], {"lambda", "p"}, w);
        const long p = as_int(need(fs[i], "p", w), w + ".p");
        if (p < 1) throw InputError(w + ".p: multiplicity must be positive");
        P.factors.push_back({read_scalar<F>(need(fs[i], "lambda", w), w + ".lambda"), static_cast<unsigned>(p)});
    }
    return P;
}

template <class F>
json write(const FactoredPoly<F>& P) {
    json fs = json::array();
    for (const auto& f : P.factors) fs.push_back({{"lambda", write(f.lambda)}, {"p", f.multiplicity}});
    return {{"leading", write(P.leading)}, {"factors", fs}};
}

template <class F>
std::vector<typename OperatorHandle<F>::DiagonalEntry> read_entries(const json& j, const std::string& where) {
    std::vector<typename OperatorHandle<F>::DiagonalEntry> out;
    const auto& a = need_array(j, where);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::string w = where + "[" + std::to_string(i) + "]";
        const auto& e = need_array(a[i], w);
        if (e.size() != 2) throw InputError(w + ": expected [eigenvalue, multiplicity]");
        out.push_back({read_scalar<F>(e[0], w + "[0]"), as_size(e[1], w + "[1]")});
    }
    return out;
}

template <class F>
json write_entries(const std::vector<typename OperatorHandle<F>::DiagonalEntry>& entries) {
    json a = json::array();
    for (const auto& e : entries) a.push_back(json::array({write(e.eigenvalue), e.multiplicity}));
    return a;
}

// {"dense": [[..], ..]} or {"diagonal": [[eigenvalue, multiplicity], ..]}; a
// bare array of rows is read as dense.
template <class F>
OperatorHandle<F> read_operator(const json& j, const std::string& where) {
    if (j.is_array()) return OperatorHandle<F>::dense(read_matrix<F>(j, where));
    require_object(j, where);
    allow_keys(j, {"dense", "diagonal"}, where);
    if (j.contains("dense") == j.contains("diagonal"))
        throw InputError(where + ": give exactly one of \"dense\" or \"diagonal\"");
    if (j.contains("dense")) return OperatorHandle<F>::dense(read_matrix<F>(j["dense"], where + ".dense"));
    return OperatorHandle<F>::diagonal(read_entries<F>(j["diagonal"], where + ".diagonal"));
}

template <class F>
json write(const OperatorHandle<F>& op) {
    if (op.is_diagonal()) return {{"diagonal", write_entries<F>(op.entries())}};
    return {{"dense", write(op.to_matrix())}};
}

// {"nvars": k, "terms": [{"exp": [..], "num": int, "den": int}]}
MultiPoly read_multipoly(const json& j, const std::string& where);
json write(const MultiPoly& p);

// {"ell": int, "members": [[int, ..], ..]}
AlphaSystem read_alpha(const json& j, const std::string& where);
json write(const AlphaSystem& a);
json write_mask(Mask m);

}  // namespace opkit::io
