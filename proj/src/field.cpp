#include "opkit/field.hpp"

#include <iomanip>
#include <sstream>

namespace opkit {

std::string to_string(const Rational& x) { return x.get_str(); }

std::string to_string(const GaussRational& x) {
    if (x.is_real()) return x.re().get_str();
    std::string out = sgn(x.re()) == 0 ? "" : x.re().get_str();
    const Rational& im = x.im();
    if (sgn(im) > 0 && !out.empty()) out += "+";
    if (sgn(im) < 0) out += "-";
    const Rational a = abs(im);
    if (a != 1) out += a.get_str() + "*";
    return out + "i";
}

std::string to_string(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

std::string to_string(const Complex& x) {
    std::ostringstream os;
    os << std::setprecision(17) << x.real();
    if (x.imag() != 0.0) os << (x.imag() < 0 ? "-" : "+") << std::abs(x.imag()) << "i";
    return os.str();
}

std::ostream& operator<<(std::ostream& os, const GaussRational& z) { return os << to_string(z); }

}  // namespace opkit
