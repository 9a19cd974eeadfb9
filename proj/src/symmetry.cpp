#include "opkit/symmetry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace opkit {

std::vector<double> real_spectrum(const Matrix<double>& m, double cluster_tol) {
    Eigen::MatrixXd a(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
    const Eigen::EigenSolver<Eigen::MatrixXd> es(a, false);
    if (es.info() != Eigen::Success) throw MathError("eigenvalue computation did not converge");
    std::vector<double> vals;
    const double scale = std::max(1.0, m.max_abs());
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
        const auto z = es.eigenvalues()[k];
        if (std::abs(z.imag()) > cluster_tol * scale) throw MathError("spectrum is not real; use complex mode");
        vals.push_back(z.real());
    }
    std::sort(vals.begin(), vals.end());
    std::vector<double> out;
    std::vector<std::size_t> counts;
    // Defective eigenvalues spread by about eps^(1/k); cluster consecutive values.
    for (double v : vals) {
        if (!out.empty() && std::abs(v - out.back() / static_cast<double>(counts.back())) <= cluster_tol * scale) {
            out.back() += v;
            ++counts.back();
        } else {
            out.push_back(v);
            counts.push_back(1);
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k] /= static_cast<double>(counts[k]);
    return out;
}

}  // namespace opkit
