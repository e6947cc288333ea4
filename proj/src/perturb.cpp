#include "confocal/perturb.hpp"

#include <algorithm>
#include <cmath>

namespace confocal {

namespace {

bool nonpositive_integer(double v) { return v <= 0 && v == std::floor(v); }

struct F4Sum {
    double value = 0;
    int diagonals = 0;
};

F4Sum f4_sum(const F4Params& p, double tol, int max_diagonals) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error(ErrorCode::NonfiniteInput, "F4 argument");
    const bool terminating = nonpositive_integer(p.a) || nonpositive_integer(p.b);
    if (!terminating && std::sqrt(std::abs(p.x)) + std::sqrt(std::abs(p.y)) >= 1)
        throw Error(ErrorCode::DivergentSeries, "F4 arguments outside sqrt|x| + sqrt|y| < 1");

    // row[m] = term (m, N - m) of the current diagonal N
    std::vector<double> row{1.0};
    F4Sum out{1.0, 1};
    int quiet = 0;
    for (int N = 1; N <= max_diagonals; ++N) {
        const double num = (p.a + N - 1) * (p.b + N - 1);
        std::vector<double> next(N + 1, 0.0);
        auto advance = [&](double prev, double den, double factor) {
            if (prev == 0 || num == 0) return 0.0;
            if (den == 0) throw Error(ErrorCode::PoleParameter, "F4 denominator Pochhammer vanishes");
            return prev * num / den * factor;
        };
        for (int m = 0; m < N; ++m) {
            const int n = N - m;
            next[m] = advance(row[m], (p.d + n - 1) * n, p.y);
        }
        next[N] = advance(row[N - 1], (p.c + N - 1) * N, p.x);
        double diag = 0, size = 0;
        for (double t : next) {
            diag += t;
            size += std::abs(t);
        }
        out.value += diag;
        out.diagonals = N + 1;
        row.swap(next);
        if (size <= tol * std::abs(out.value)) {
            if (++quiet == 3) return out;
        } else {
            quiet = 0;
        }
    }
    throw Error(ErrorCode::DivergentSeries, "F4 series did not settle within the diagonal budget");
}

}  // namespace

double appell_f4(const F4Params& p, double tol, int max_diagonals) { return f4_sum(p, tol, max_diagonals).value; }

int appell_f4_diagonals(const F4Params& p, double tol, int max_diagonals) {
    return f4_sum(p, tol, max_diagonals).diagonals;
}

double v_gamma_scaled(double gamma, double xt, double yt) {
    if (yt == 0) throw Error(ErrorCode::DomainError, "V_gamma needs y~ != 0");
    const double power = gamma == std::floor(gamma) ? std::pow(yt, -gamma) : std::pow(std::abs(yt), -gamma);
    if (gamma == 1) return power;
    const double f4 = appell_f4({1, 2 - gamma, 2, 1 - gamma, xt, yt});
    return power * ((1 - gamma) * xt * f4 + 1);
}

double v_gamma(double gamma, double x, double y, double lambda) {
    if (lambda == 0) throw Error(ErrorCode::DomainError, "lambda must be nonzero");
    return v_gamma_scaled(gamma, x * x / lambda, -y * y / lambda);
}

double v_gamma_3d(double gamma, double x, double y, double z, double A, double B, double C) {
    if (z == 0) throw Error(ErrorCode::DomainError, "potential needs z != 0");
    const double xh = x * x * C * (C - B) / (z * z * (B - A) * A);
    const double yh = y * y * C * (A - C) / (z * z * (B - A) * B);
    return v_gamma_scaled(gamma, xh, yh) / (z * z);
}

namespace {

template <int D>
struct Derivatives {
    std::array<double, D> g{};
    std::array<std::array<double, D>, D> h{};
};

template <int D>
using FieldD = std::function<double(const std::array<double, D>&)>;

// Central differences with step h.
template <int D>
Derivatives<D> central(const FieldD<D>& V, const std::array<double, D>& p, double h) {
    auto at = [&](int i, double di, int j, double dj) {
        std::array<double, D> q = p;
        q[i] += di;
        q[j] += dj;
        return V(q);
    };
    Derivatives<D> d;
    const double v0 = V(p);
    for (int i = 0; i < D; ++i) {
        const double vp = at(i, h, i, 0), vm = at(i, -h, i, 0);
        d.g[i] = (vp - vm) / (2 * h);
        d.h[i][i] = (vp - 2 * v0 + vm) / (h * h);
        for (int j = i + 1; j < D; ++j)
            d.h[i][j] = d.h[j][i] = (at(i, h, j, h) - at(i, h, j, -h) - at(i, -h, j, h) + at(i, -h, j, -h)) / (4 * h * h);
    }
    return d;
}

template <int D>
Derivatives<D> derivatives(const FieldD<D>& V, const std::array<double, D>& p, const FdOptions& opt) {
    double norm = 0;
    for (double c : p) norm += c * c;
    const double h = opt.rel_step * std::sqrt(norm);
    for (double c : p)
        if (!(std::abs(c) > h)) throw Error(ErrorCode::NonsmoothPoint, "difference stencil reaches a coordinate axis");
    const Derivatives<D> coarse = central<D>(V, p, h);
    if (!opt.richardson) return coarse;
    const Derivatives<D> fine = central<D>(V, p, h / 2);
    Derivatives<D> out;
    for (int i = 0; i < D; ++i) {
        out.g[i] = (4 * fine.g[i] - coarse.g[i]) / 3;
        for (int j = 0; j < D; ++j) out.h[i][j] = (4 * fine.h[i][j] - coarse.h[i][j]) / 3;
    }
    return out;
}

ResidualSample collect(const std::vector<double>& terms, double leading) {
    ResidualSample s;
    for (double t : terms) {
        s.residual += t;
        s.largest_term = std::max(s.largest_term, std::abs(t));
    }
    s.magnitude = std::abs(leading);
    return s;
}

ResidualReport summarize(const std::vector<ResidualSample>& samples) {
    ResidualReport r;
    double largest = 0;
    for (const auto& s : samples) {
        r.max_residual = std::max(r.max_residual, std::abs(s.residual));
        r.normalization = std::max(r.normalization, s.magnitude);
        largest = std::max(largest, s.largest_term);
    }
    // a leading term at finite-difference noise level carries no scale
    if (r.normalization <= 1e-6 * largest) r.normalization = largest;
    for (const auto& s : samples) r.per_sample.push_back(r.normalization > 0 ? s.residual / r.normalization : 0.0);
    r.normalized = r.normalization > 0 ? r.max_residual / r.normalization : 0.0;
    return r;
}

}  // namespace

ResidualSample berdar_sample(const Field2& V, double lambda, Point2 p, const FdOptions& opt) {
    const FieldD<2> f = [&](const std::array<double, 2>& q) {
        return V(q[0], q[1]);
    };
    const auto d = derivatives<2>(f, {p.x, p.y}, opt);
    const double x = p.x, y = p.y;
    const double Vx = d.g[0], Vy = d.g[1], Vxx = d.h[0][0], Vyy = d.h[1][1], Vxy = d.h[0][1];
    const double leading = lambda * Vxy;
    return collect({leading, 3 * y * Vx, -3 * x * Vy, (y * y - x * x) * Vxy, x * y * Vxx, -x * y * Vyy}, leading);
}

ResidualReport berdar_residual(const Field2& V, double lambda, const std::vector<Point2>& samples,
                               const FdOptions& opt) {
    std::vector<ResidualSample> out;
    for (const auto& p : samples) out.push_back(berdar_sample(V, lambda, p, opt));
    return summarize(out);
}

std::array<ResidualSample, 3> jacobi_system_sample(const Field3& V, double A, double B, double C, Point3 p,
                                                   const FdOptions& opt) {
    const FieldD<3> f = [&](const std::array<double, 3>& q) {
        return V(q[0], q[1], q[2]);
    };
    const auto d = derivatives<3>(f, {p.x, p.y, p.z}, opt);
    const double x = p.x, y = p.y, z = p.z;
    const double Vx = d.g[0], Vy = d.g[1], Vz = d.g[2];
    const double Vxx = d.h[0][0], Vyy = d.h[1][1], Vzz = d.h[2][2];
    const double Vxy = d.h[0][1], Vyz = d.h[1][2], Vzx = d.h[2][0];
    const double S = x * x / (A * A) + y * y / (B * B) + z * z / (C * C);

    const double l1 = S * Vxy * (A - B) / (A * B);
    const double l2 = S * Vyz * (B - C) / (B * C);
    const double l3 = S * Vzx * (C - A) / (A * C);
    return {
        collect({l1, -3 * y / (B * B) * Vx / A, 3 * x / (A * A) * Vy / B,
                 (x * x / (A * A * A) - y * y / (B * B * B)) * Vxy, x * y / (A * B) * (Vyy / A - Vxx / B),
                 z * x / (C * A * A) * Vyz, -z * y / (C * B * B) * Vzx},
                l1),
        collect({l2, -3 * z / (C * C) * Vy / B, 3 * y / (B * B) * Vz / C,
                 (y * y / (B * B * B) - z * z / (C * C * C)) * Vyz, y * z / (B * C) * (Vzz / B - Vyy / C),
                 x * y / (A * B * B) * Vzx, -x * z / (A * C * C) * Vxy},
                l2),
        collect({l3, -3 * x / (A * A) * Vz / C, 3 * z / (C * C) * Vx / A,
                 (z * z / (C * C * C) - x * x / (A * A * A)) * Vzx, x * z / (A * C) * (Vxx / C - Vzz / A),
                 z * y / (B * C * C) * Vxy, -y * x / (B * A * A) * Vyz},
                l3),
    };
}

JacobiReport jacobi_system_residual(const Field3& V, double A, double B, double C, const std::vector<Point3>& samples,
                                    const FdOptions& opt) {
    std::array<std::vector<ResidualSample>, 3> per;
    for (const auto& p : samples) {
        const auto s = jacobi_system_sample(V, A, B, C, p, opt);
        for (int k = 0; k < 3; ++k) per[k].push_back(s[k]);
    }
    JacobiReport r;
    for (int k = 0; k < 3; ++k) {
        r.equations[k] = summarize(per[k]);
        r.normalized = std::max(r.normalized, r.equations[k].normalized);
    }
    return r;
}

}  // namespace confocal
