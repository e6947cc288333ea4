#include "confocal/poly.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace confocal {

std::vector<double> real_roots(const Poly<double>& p_in, double imag_tol) {
    Poly<double> p = p_in;
    poly_trim(p);
    const int n = static_cast<int>(p.size()) - 1;
    std::vector<double> out;
    if (n < 1) return out;
    if (n == 1) return {-p[0] / p[1]};
    if (n == 2) {
        const double a = p[2], b = p[1], c = p[0];
        double disc = b * b - 4 * a * c;
        const double scale = b * b + std::abs(4 * a * c);
        if (disc < 0 && disc > -1e-13 * scale) disc = 0;
        if (disc < 0) return out;
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        double r1 = q / a;
        double r2 = q != 0 ? c / q : r1;
        if (r1 > r2) std::swap(r1, r2);
        return {r1, r2};
    }
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -p[i] / p[n];
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    const auto ev = es.eigenvalues();
    const Poly<double> dp = poly_derivative(p);
    for (int i = 0; i < n; ++i) {
        const double re = ev[i].real();
        if (std::abs(ev[i].imag()) > imag_tol * std::max(1.0, std::abs(re))) continue;
        double x = re;
        for (int it = 0; it < 3; ++it) {
            const double d = poly_eval(dp, x);
            if (d == 0) break;
            const double fx = poly_eval(p, x);
            const double xn = x - fx / d;
            if (!std::isfinite(xn) || std::abs(poly_eval(p, xn)) >= std::abs(fx)) break;
            x = xn;
        }
        out.push_back(x);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace confocal
