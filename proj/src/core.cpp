#include "confocal/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace confocal {

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidFamily: return "InvalidFamily";
        case ErrorCode::NonfiniteInput: return "NonfiniteInput";
        case ErrorCode::DegenerateQuadric: return "DegenerateQuadric";
        case ErrorCode::DegenerateLine: return "DegenerateLine";
        case ErrorCode::NotOnQuadric: return "NotOnQuadric";
        case ErrorCode::EscapedDomain: return "EscapedDomain";
        case ErrorCode::StalledRay: return "StalledRay";
        case ErrorCode::NoSuchBounce: return "NoSuchBounce";
        case ErrorCode::UnboundedGame: return "UnboundedGame";
        case ErrorCode::TangentStep: return "TangentStep";
        case ErrorCode::RepeatedAxis: return "RepeatedAxis";
        case ErrorCode::BranchPoint: return "BranchPoint";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::PeriodTooShort: return "PeriodTooShort";
        case ErrorCode::BranchPointInterior: return "BranchPointInterior";
        case ErrorCode::NegativePolynomial: return "NegativePolynomial";
        case ErrorCode::GenusUnsupported: return "GenusUnsupported";
        case ErrorCode::StepRejected: return "StepRejected";
        case ErrorCode::TangentialIntersection: return "TangentialIntersection";
        case ErrorCode::DivergentSeries: return "DivergentSeries";
        case ErrorCode::PoleParameter: return "PoleParameter";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::NonsmoothPoint: return "NonsmoothPoint";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

ConfocalFamily::ConfocalFamily(std::vector<double> axes, ToleranceProfile tol)
    : a_(std::move(axes)), tol_(tol) {
    if (a_.size() < 2) throw Error(ErrorCode::InvalidFamily, "need d >= 2");
    for (std::size_t i = 0; i < a_.size(); ++i) {
        if (!std::isfinite(a_[i])) throw Error(ErrorCode::NonfiniteInput, "axis");
        if (a_[i] <= 0) throw Error(ErrorCode::InvalidFamily, "axes must be positive");
        if (i > 0 && !(a_[i] < a_[i - 1]))
            throw Error(ErrorCode::InvalidFamily, "axes must be strictly decreasing");
    }
}

double ConfocalFamily::scale() const { return std::sqrt(a_[0]); }

double ConfocalFamily::Q(double lambda, const Vec& x) const {
    double s = 0;
    for (std::size_t i = 0; i < a_.size(); ++i) s += x(i) * x(i) / (a_[i] - lambda);
    return s;
}

double ConfocalFamily::Q(double lambda, const Vec& x, const Vec& y) const {
    double s = 0;
    for (std::size_t i = 0; i < a_.size(); ++i) s += x(i) * y(i) / (a_[i] - lambda);
    return s;
}

Vec ConfocalFamily::grad(double lambda, const Vec& x) const {
    Vec g(a_.size());
    for (std::size_t i = 0; i < a_.size(); ++i) g(i) = 2 * x(i) / (a_[i] - lambda);
    return g;
}

bool ConfocalFamily::is_axis(double lambda) const {
    return std::find(a_.begin(), a_.end(), lambda) != a_.end();
}

QuadricParam classify(const ConfocalFamily& family, double lambda) {
    QuadricParam q;
    q.lambda = lambda;
    const auto& a = family.axes();
    const int d = static_cast<int>(a.size());
    for (int s = 0; s < d; ++s) {
        if (lambda == a[s]) {
            q.kind = QuadricKind::Degenerate;
            q.index = s + 1;
            return q;
        }
    }
    if (lambda < a[d - 1]) {
        q.kind = QuadricKind::Ellipsoid;
        q.index = d;
        return q;
    }
    for (int s = 1; s < d; ++s) {
        if (lambda > a[s] && lambda < a[s - 1]) {
            q.kind = QuadricKind::Hyperboloid;
            q.index = s;
            return q;
        }
    }
    q.kind = QuadricKind::Hyperboloid;  // lambda > a_1: empty real quadric
    q.index = 0;
    return q;
}

const char* kind_name(QuadricKind kind) {
    switch (kind) {
        case QuadricKind::Ellipsoid: return "ellipsoid";
        case QuadricKind::Hyperboloid: return "hyperboloid";
        case QuadricKind::Degenerate: return "degenerate-hyperplane";
    }
    return "unknown";
}

namespace {

// Root of sum x_i^2/(b_i - l) = 1 on (lo, hi), where the left side increases from -inf/below 1
// to +inf/above 1. Bisection with Newton steps kept inside the bracket.
double bracketed_root(const std::vector<double>& b, const std::vector<double>& x2, double lo,
                      double hi) {
    auto f = [&](double l) {
        double s = 0, ds = 0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double r = 1.0 / (b[i] - l);
            s += x2[i] * r;
            ds += x2[i] * r * r;
        }
        return std::pair<double, double>{s - 1.0, ds};
    };
    double l = 0.5 * (lo + hi);
    for (int it = 0; it < 300; ++it) {
        const auto [v, dv] = f(l);
        if (v == 0) return l;
        if (v > 0) hi = l; else lo = l;
        double next = l - v / dv;
        if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
        if (next == l || hi - lo <= 4 * std::numeric_limits<double>::epsilon() *
                                        std::max({1.0, std::abs(lo), std::abs(hi)}))
            return next;
        l = next;
    }
    return l;
}

}  // namespace

EllipticCoordinates elliptic_coordinates(const ConfocalFamily& family, const Vec& x) {
    const auto& a = family.axes();
    const std::size_t d = a.size();
    if (static_cast<std::size_t>(x.size()) != d) throw Error(ErrorCode::NonfiniteInput, "dimension");
    for (std::size_t i = 0; i < d; ++i)
        if (!std::isfinite(x(i))) throw Error(ErrorCode::NonfiniteInput, "point");
    std::vector<std::pair<double, bool>> roots;
    std::vector<double> b, x2;
    for (std::size_t i = 0; i < d; ++i) {
        if (x(i) == 0.0) roots.push_back({a[i], true});
        else {
            b.push_back(a[i]);
            x2.push_back(x(i) * x(i));
        }
    }
    double norm2 = 0;
    for (double v : x2) norm2 += v;
    for (std::size_t j = 0; j < b.size(); ++j) {
        const double hi = b[j];
        const double lo = (j + 1 < b.size()) ? b[j + 1] : b.back() - norm2 - 1.0;
        roots.push_back({bracketed_root(b, x2, lo, hi), false});
    }
    std::sort(roots.begin(), roots.end(),
              [](const auto& p, const auto& q) { return p.first > q.first; });
    EllipticCoordinates ec;
    for (const auto& [l, deg] : roots) {
        ec.lambda.push_back(l);
        ec.degenerate.push_back(deg);
    }
    return ec;
}

Vec cartesian_from_elliptic(const ConfocalFamily& family, const std::vector<double>& lambda,
                            const std::vector<int>& signs) {
    const auto& a = family.axes();
    const std::size_t d = a.size();
    Vec x(d);
    for (std::size_t i = 0; i < d; ++i) {
        double num = 1, den = 1;
        for (std::size_t j = 0; j < d; ++j) num *= a[i] - lambda[j];
        for (std::size_t k = 0; k < d; ++k)
            if (k != i) den *= a[i] - a[k];
        const double v = std::max(0.0, num / den);
        x(i) = (i < signs.size() && signs[i] < 0 ? -1.0 : 1.0) * std::sqrt(v);
    }
    return x;
}

Poly<mpq_class> pencil_polynomial(const std::vector<mpq_class>& axes,
                                  const std::vector<mpq_class>& alphas) {
    std::vector<mpq_class> r = axes;
    r.insert(r.end(), alphas.begin(), alphas.end());
    return poly_from_factors(r);
}

Poly<double> pencil_polynomial(const ConfocalFamily& family, const std::vector<double>& alphas) {
    std::vector<double> r = family.axes();
    r.insert(r.end(), alphas.begin(), alphas.end());
    return poly_from_factors(r);
}

Ray make_ray(Vec point, Vec direction) {
    const double n = direction.norm();
    if (!(n > 0) || !std::isfinite(n)) throw Error(ErrorCode::DegenerateLine, "zero direction");
    return Ray{std::move(point), direction / n};
}

double line_discriminant(const ConfocalFamily& family, double lambda, const Ray& ray) {
    const double qy = family.Q(lambda, ray.direction);
    const double qxy = family.Q(lambda, ray.point, ray.direction);
    const double qx = family.Q(lambda, ray.point);
    return qxy * qxy - qy * (qx - 1.0);
}

Intersection intersect(const ConfocalFamily& family, double lambda, const Ray& ray) {
    if (family.is_axis(lambda)) throw Error(ErrorCode::DegenerateQuadric, "lambda equals an axis");
    const double A = family.Q(lambda, ray.direction);
    const double B = family.Q(lambda, ray.point, ray.direction);
    const double C = family.Q(lambda, ray.point) - 1.0;
    Intersection out;
    out.discriminant = B * B - A * C;
    if (A == 0) {
        if (B != 0) out.t.push_back(-C / (2 * B));
        return out;
    }
    const double scale = B * B + std::abs(A * C);
    if (std::abs(out.discriminant) <= 1e-13 * scale) {
        out.tangent = true;
        out.t.push_back(-B / A);
        return out;
    }
    if (out.discriminant < 0) return out;
    const double q = -(B + std::copysign(std::sqrt(out.discriminant), B));
    double t1 = q / A;
    double t2 = q != 0 ? C / q : -t1;
    if (t1 > t2) std::swap(t1, t2);
    out.t = {t1, t2};
    return out;
}

Poly<double> caustic_polynomial(const ConfocalFamily& family, const Ray& ray) {
    const auto& a = family.axes();
    const std::size_t d = a.size();
    const Vec& x = ray.point;
    const Vec y = ray.direction / ray.direction.norm();
    Poly<double> N{0.0};
    for (std::size_t i = 0; i < d; ++i) {
        Poly<double> term{y(i) * y(i)};
        for (std::size_t k = 0; k < d; ++k)
            if (k != i) term = poly_mul(term, Poly<double>{a[k], -1.0});
        N = poly_add(N, term);
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double w = x(i) * y(j) - x(j) * y(i);
            Poly<double> term{-w * w};
            for (std::size_t k = 0; k < d; ++k)
                if (k != i && k != j) term = poly_mul(term, Poly<double>{a[k], -1.0});
            N = poly_add(N, term);
        }
    N.resize(d);
    return N;
}

CausticSet caustics_of_line(const ConfocalFamily& family, const Ray& ray) {
    if (!(ray.direction.norm() > 0)) throw Error(ErrorCode::DegenerateLine, "zero direction");
    const auto& a = family.axes();
    const Poly<double> N = caustic_polynomial(family, ray);
    std::vector<double> roots;
    if (N.size() == 2) roots = {-N[0] / N[1]};
    else roots = real_roots(N, 1e-6);
    if (roots.size() + 1 != a.size()) {
        // complex pair from rounding at a double root: fall back to the real parts
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(N.size() - 1, N.size() - 1);
        const int n = static_cast<int>(N.size()) - 1;
        for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < n; ++i) comp(i, n - 1) = -N[i] / N[n];
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
        roots.clear();
        for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()[i].real());
        std::sort(roots.begin(), roots.end());
    }
    CausticSet cs;
    const double tol = 1e-9 * a[0];
    for (double r : roots) {
        bool deg = false;
        for (double ai : a)
            if (std::abs(r - ai) <= tol) deg = true;
        cs.alphas.push_back(r);
        cs.degenerate.push_back(deg);
    }
    return cs;
}

Vec reflect(const ConfocalFamily& family, double lambda, const Vec& point, const Vec& incoming,
            ReflectionMode mode) {
    if (family.is_axis(lambda)) throw Error(ErrorCode::DegenerateQuadric, "lambda equals an axis");
    const double q = family.Q(lambda, point);
    if (!(std::abs(q - 1.0) <= family.tol().on_quadric))
        throw Error(ErrorCode::NotOnQuadric, "point is not on the quadric");
    const Vec n = family.grad(lambda, point);
    Vec out = incoming - 2.0 * incoming.dot(n) / n.squaredNorm() * n;
    out /= out.norm();
    return mode == ReflectionMode::Real ? out : Vec(-out);
}

Hyperplane normalize_hyperplane(Vec c) {
    const double m = c.cwiseAbs().maxCoeff();
    if (!(m > 0)) throw Error(ErrorCode::DegenerateLine, "zero hyperplane");
    for (int i = 0; i < c.size(); ++i) {
        if (std::abs(c(i)) > 1e-14 * m) {
            c /= c(i);
            break;
        }
    }
    return Hyperplane{c};
}

Hyperplane tangent_hyperplane(const ConfocalFamily& family, double lambda, const Vec& point) {
    if (family.is_axis(lambda)) throw Error(ErrorCode::DegenerateQuadric, "lambda equals an axis");
    if (!(std::abs(family.Q(lambda, point) - 1.0) <= family.tol().on_quadric))
        throw Error(ErrorCode::NotOnQuadric, "point is not on the quadric");
    const Vec n = family.grad(lambda, point);
    Vec c(n.size() + 1);
    c.head(n.size()) = n;
    c(n.size()) = n.dot(point);
    return normalize_hyperplane(c);
}

double pencil_ratio(const std::vector<Hyperplane>& planes) {
    if (planes.size() < 3) return 0.0;
    const int cols = static_cast<int>(planes[0].coefficients.size());
    Eigen::MatrixXd m(planes.size(), cols);
    for (std::size_t i = 0; i < planes.size(); ++i)
        m.row(i) = planes[i].coefficients.transpose() / planes[i].coefficients.norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto s = svd.singularValues();
    if (s.size() < 3) return 0.0;
    return s(2) / s(0);
}

bool in_pencil(const std::vector<Hyperplane>& planes, double ratio_tol) {
    return pencil_ratio(planes) < ratio_tol;
}

int rational_rank(std::vector<std::vector<mpq_class>> m) {
    if (m.empty()) return 0;
    const std::size_t rows = m.size(), cols = m[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && m[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(m[piv], m[r]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (m[i][c] == 0) continue;
            const mpq_class f = m[i][c] / m[r][c];
            for (std::size_t k = c; k < cols; ++k) m[i][k] -= f * m[r][k];
        }
        ++r;
    }
    return static_cast<int>(r);
}

mpq_class rational_determinant(std::vector<std::vector<mpq_class>> m) {
    const std::size_t n = m.size();
    mpq_class det = 1;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && m[piv][c] == 0) ++piv;
        if (piv == n) return 0;
        if (piv != c) {
            std::swap(m[piv], m[c]);
            det = -det;
        }
        det *= m[c][c];
        for (std::size_t i = c + 1; i < n; ++i) {
            if (m[i][c] == 0) continue;
            const mpq_class f = m[i][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k) m[i][k] -= f * m[c][k];
        }
    }
    return det;
}

bool in_pencil_exact(const std::vector<std::vector<mpq_class>>& planes) {
    return rational_rank(planes) <= 2;
}

}  // namespace confocal
