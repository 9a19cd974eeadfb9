#pragma once

// Scalar fields used throughout opkit.
//
//   Rational       exact rationals (GMP), the default field
//   GaussRational  exact elements of Q(i), used for conjugate-pair grouping
//   double         real floating point
//   Complex        std::complex<double>
//
// Every algorithm is a template over the field; floating instantiations take
// a Tolerance and compare against it, exact ones compare with ==.

#include "opkit/errors.hpp"

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>

namespace opkit {

using Rational = mpq_class;
using Complex = std::complex<double>;

struct Tolerance {
    double eps = 1e-12;  // relative
};

class GaussRational {
public:
    GaussRational() = default;
    GaussRational(long v) : re_(v), im_(0) {}  // NOLINT(google-explicit-constructor)
    GaussRational(Rational re) : re_(std::move(re)), im_(0) {}  // NOLINT
    GaussRational(Rational re, Rational im) : re_(std::move(re)), im_(std::move(im)) {}

    const Rational& re() const { return re_; }
    const Rational& im() const { return im_; }
    bool is_real() const { return sgn(im_) == 0; }
    GaussRational conj() const { return {re_, -im_}; }
    Rational norm() const { return Rational(re_ * re_ + im_ * im_); }

    GaussRational& operator+=(const GaussRational& o) {
        re_ += o.re_;
        im_ += o.im_;
        return *this;
    }
    GaussRational& operator-=(const GaussRational& o) {
        re_ -= o.re_;
        im_ -= o.im_;
        return *this;
    }
    GaussRational& operator*=(const GaussRational& o) {
        Rational r = re_ * o.re_ - im_ * o.im_;
        Rational i = re_ * o.im_ + im_ * o.re_;
        re_ = std::move(r);
        im_ = std::move(i);
        return *this;
    }
    GaussRational& operator/=(const GaussRational& o) {
        Rational d = o.norm();
        if (sgn(d) == 0) throw MathError("division by zero in Q(i)");
        Rational r = (re_ * o.re_ + im_ * o.im_) / d;
        Rational i = (im_ * o.re_ - re_ * o.im_) / d;
        re_ = std::move(r);
        im_ = std::move(i);
        return *this;
    }

    friend GaussRational operator+(GaussRational a, const GaussRational& b) { return a += b; }
    friend GaussRational operator-(GaussRational a, const GaussRational& b) { return a -= b; }
    friend GaussRational operator*(GaussRational a, const GaussRational& b) { return a *= b; }
    friend GaussRational operator/(GaussRational a, const GaussRational& b) { return a /= b; }
    friend GaussRational operator-(const GaussRational& a) { return {-a.re_, -a.im_}; }
    friend bool operator==(const GaussRational& a, const GaussRational& b) {
        return a.re_ == b.re_ && a.im_ == b.im_;
    }
    friend bool operator!=(const GaussRational& a, const GaussRational& b) { return !(a == b); }

private:
    Rational re_{0};
    Rational im_{0};
};

std::ostream& operator<<(std::ostream& os, const GaussRational& z);

template <class F>
inline constexpr bool is_exact_v = std::is_same_v<F, Rational> || std::is_same_v<F, GaussRational>;

template <class F>
inline constexpr bool is_complex_v = std::is_same_v<F, Complex> || std::is_same_v<F, GaussRational>;

inline double magnitude(const Rational& x) { return std::abs(x.get_d()); }
inline double magnitude(const GaussRational& x) { return std::hypot(x.re().get_d(), x.im().get_d()); }
inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const Complex& x) { return std::abs(x); }

// Exact fields ignore the threshold.
inline bool is_zero(const Rational& x, double = 0.0) { return sgn(x) == 0; }
inline bool is_zero(const GaussRational& x, double = 0.0) { return sgn(x.re()) == 0 && sgn(x.im()) == 0; }
inline bool is_zero(double x, double thresh = 0.0) { return std::abs(x) <= thresh; }
inline bool is_zero(const Complex& x, double thresh = 0.0) { return std::abs(x) <= thresh; }

inline Rational conj(const Rational& x) { return x; }
inline GaussRational conj(const GaussRational& x) { return x.conj(); }
inline double conj(double x) { return x; }

template <class F>
F from_rational(const Rational& q) {
    if constexpr (std::is_same_v<F, Rational>) {
        return q;
    } else if constexpr (std::is_same_v<F, GaussRational>) {
        return GaussRational(q);
    } else if constexpr (std::is_same_v<F, double>) {
        return q.get_d();
    } else {
        return Complex(q.get_d(), 0.0);
    }
}

template <class F>
F from_int(long v) {
    return from_rational<F>(Rational(v));
}

std::string to_string(const Rational& x);
std::string to_string(const GaussRational& x);
std::string to_string(double x);
std::string to_string(const Complex& x);

}  // namespace opkit
