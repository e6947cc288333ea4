#include "confocal/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/tools/toms748_solve.hpp>

namespace confocal {

namespace {

void require_surface(const ConfocalFamily& f) {
    if (f.dim() != 3) throw Error(ErrorCode::OutOfRange, "surface billiards are implemented for d = 3");
}

// second derivative keeping the curve on Q_0
Vec acceleration(const ConfocalFamily& f, const Vec& x, const Vec& v) {
    Vec g(3), av(3);
    for (int i = 0; i < 3; ++i) {
        g(i) = x(i) / f.a(i);
        av(i) = v(i) / f.a(i);
    }
    return -(av.dot(v) / g.squaredNorm()) * g;
}

double boundary_value(const ConfocalFamily& f, double beta, const Vec& x) { return f.Q(beta, x) - 1; }

int sign_of(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

Vec boundary_normal(const ConfocalFamily& f, double beta, const Vec& x) {
    const Vec n0 = f.grad(0, x).normalized();
    Vec n = f.grad(beta, x);
    n -= n.dot(n0) * n0;
    return n.normalized();
}

// Step length h in (0, ds] at which the boundary function vanishes.
SurfaceState refine_crossing(const ConfocalFamily& f, double beta, const SurfaceState& s, double ds, int before,
                             double width, double& h_out) {
    auto g = [&](double h) { return boundary_value(f, beta, geodesic_step(f, s, h).x); };
    double lo = 0, hi = ds;
    double glo = g(lo), ghi = g(hi);
    if (sign_of(glo) != before) glo = before * std::numeric_limits<double>::min();
    boost::uintmax_t iterations = 100;
    const auto tol = [width](double a, double b) { return std::abs(b - a) <= std::min(width, 1e-15 + 4e-16 * std::abs(a)); };
    const auto root = boost::math::tools::toms748_solve(g, lo, hi, glo, ghi, tol, iterations);
    // keep the end on the far side so the next step starts in the domain
    h_out = root.second;
    return geodesic_step(f, s, h_out);
}

void track(ConstraintResidual& worst, const ConstraintResidual& r) {
    worst.on_quadric = std::max(worst.on_quadric, r.on_quadric);
    worst.tangent = std::max(worst.tangent, r.tangent);
}

}  // namespace

ConstraintResidual constraint_residual(const ConfocalFamily& f, const SurfaceState& s) {
    const Vec g = f.grad(0, s.x);
    return {std::abs(f.Q(0, s.x) - 1), std::abs(g.dot(s.v)) / g.norm()};
}

SurfaceState project_state(const ConfocalFamily& f, SurfaceState s) {
    require_surface(f);
    const double speed = 1.0;
    for (int it = 0;; ++it) {
        const double q = f.Q(0, s.x) - 1;
        if (std::abs(q) < 1e-15) break;
        if (it == 8) throw Error(ErrorCode::StepRejected, "projection onto Q_0 did not converge");
        const Vec g = f.grad(0, s.x);
        s.x -= (q / g.squaredNorm()) * g;
    }
    const Vec n = f.grad(0, s.x).normalized();
    s.v -= s.v.dot(n) * n;
    const double vn = s.v.norm();
    if (!(vn > 0)) throw Error(ErrorCode::StepRejected, "velocity vanished in projection");
    s.v *= speed / vn;
    return s;
}

SurfaceState geodesic_step(const ConfocalFamily& f, const SurfaceState& s, double ds) {
    require_surface(f);
    const Vec k1x = s.v, k1v = acceleration(f, s.x, s.v);
    const Vec x2 = s.x + 0.5 * ds * k1x, v2 = s.v + 0.5 * ds * k1v;
    const Vec k2x = v2, k2v = acceleration(f, x2, v2);
    const Vec x3 = s.x + 0.5 * ds * k2x, v3 = s.v + 0.5 * ds * k2v;
    const Vec k3x = v3, k3v = acceleration(f, x3, v3);
    const Vec x4 = s.x + ds * k3x, v4 = s.v + ds * k3v;
    const Vec k4x = v4, k4v = acceleration(f, x4, v4);
    SurfaceState out{s.x + ds / 6 * (k1x + 2 * k2x + 2 * k3x + k4x), s.v + ds / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)};
    return project_state(f, out);
}

double surface_caustic(const ConfocalFamily& f, const SurfaceState& s) {
    require_surface(f);
    const CausticSet c = caustics_of_line(f, Ray{s.x, s.v});
    return c.alphas.back();
}

GeodesicRun geodesic_flow(const ConfocalFamily& f, SurfaceState s, double ds, int steps) {
    GeodesicRun run;
    const double alpha0 = surface_caustic(f, s);
    for (int k = 0; k < steps; ++k) {
        s = geodesic_step(f, s, ds);
        run.length += ds;
        track(run.max_residual, constraint_residual(f, s));
        run.max_caustic_drift = std::max(run.max_caustic_drift, std::abs(surface_caustic(f, s) - alpha0) / f.a(0));
    }
    run.final = s;
    return run;
}

SurfaceTrajectory geodesic_billiard(const ConfocalFamily& f, double beta, const SurfaceState& s0, int max_bounces,
                                    const GeodesicOptions& opt) {
    require_surface(f);
    if (classify(f, beta).kind == QuadricKind::Degenerate)
        throw Error(ErrorCode::DegenerateQuadric, "boundary parameter equals an axis");
    const double scale = f.scale(), ds = opt.ds * scale;
    SurfaceState s = project_state(f, s0);
    int side = sign_of(boundary_value(f, beta, s.x));
    if (std::abs(boundary_value(f, beta, s.x)) < 1e-12) side = sign_of(f.grad(beta, s.x).dot(s.v));
    if (side == 0 || std::abs(surface_caustic(f, s) - beta) < 1e-9 * f.a(0))
        throw Error(ErrorCode::StalledRay, "trajectory is tangent to the boundary");

    SurfaceTrajectory t;
    t.alpha = surface_caustic(f, s);
    double arclength = 0;
    while (static_cast<int>(t.bounces.size()) < max_bounces && arclength < opt.max_length * scale) {
        const SurfaceState next = geodesic_step(f, s, ds);
        if (sign_of(boundary_value(f, beta, next.x)) != -side) {
            s = next;
            arclength += ds;
            track(t.max_residual, constraint_residual(f, s));
            continue;
        }
        double h = ds;
        SurfaceState c = refine_crossing(f, beta, s, ds, side, opt.crossing_tol * scale, h);
        arclength += h;
        const Vec n = boundary_normal(f, beta, c.x);
        const double vn = c.v.dot(n);
        if (std::abs(vn) < 1e-9) throw Error(ErrorCode::StalledRay, "tangential contact with the boundary");
        const double a_in = surface_caustic(f, c);
        c.v -= 2 * vn * n;
        c = project_state(f, c);
        const double a_out = surface_caustic(f, c);
        t.max_caustic_drift = std::max({t.max_caustic_drift, std::abs(a_in - t.alpha) / f.a(0),
                                        std::abs(a_out - t.alpha) / f.a(0)});
        track(t.max_residual, constraint_residual(f, c));
        t.bounces.push_back({c.x, c.v, arclength});
        s = c;
    }
    t.length = arclength;
    return t;
}

std::optional<SurfaceClosure> detect_surface_closure(const ConfocalFamily& f, const SurfaceTrajectory& t,
                                                     double tol) {
    if (t.bounces.size() < 2) return std::nullopt;
    const auto& b0 = t.bounces.front();
    for (std::size_t n = 1; n < t.bounces.size(); ++n) {
        const auto& b = t.bounces[n];
        const double e = std::max((b.point - b0.point).norm() / f.scale(), (b.velocity - b0.velocity).norm());
        if (e < tol) return SurfaceClosure{static_cast<int>(n), e};
    }
    return std::nullopt;
}

std::vector<Crossing> geodesic_crossings(const ConfocalFamily& f, double beta, int domain_side,
                                         const SurfaceState& s0, double length, const GeodesicOptions& opt) {
    require_surface(f);
    const double scale = f.scale(), ds = opt.ds * scale;
    const double dir = length < 0 ? -1 : 1;
    SurfaceState s = project_state(f, SurfaceState{s0.x, dir * s0.v});
    std::vector<Crossing> out;
    int before = sign_of(boundary_value(f, beta, s.x));
    double arclength = 0;
    while (arclength < std::abs(length)) {
        const SurfaceState next = geodesic_step(f, s, ds);
        const int after = sign_of(boundary_value(f, beta, next.x));
        if (before != 0 && after != 0 && after != before) {
            double h = ds;
            const SurfaceState c = refine_crossing(f, beta, s, ds, before, opt.crossing_tol * scale, h);
            out.push_back({c.x, dir * c.v, dir * (arclength + h), after == domain_side});
        }
        if (after != 0) before = after;
        s = next;
        arclength += ds;
    }
    return out;
}

namespace {

double state_distance(const ConfocalFamily& f, const Vec& x, const Vec& v, const Vec& y, const Vec& w) {
    return std::max((x - y).norm() / f.scale(), std::min((v - w).norm(), (v + w).norm()));
}

}  // namespace

TBetaResult t_beta(const ConfocalFamily& f, double beta, int domain_side, const SurfaceState& s, double window,
                   const GeodesicOptions& opt) {
    TBetaResult r;
    // a geodesic touches the curve Q_beta exactly when its caustic is Q_beta
    if (std::abs(surface_caustic(f, s) - beta) < 1e-9 * f.a(0))
        throw Error(ErrorCode::TangentialIntersection, "geodesic is tangent to the boundary");
    for (const auto& c : geodesic_crossings(f, beta, domain_side, s, window, opt))
        (c.entering ? r.s1 : r.s2).push_back(c);
    if (r.s2.empty()) {
        r.identity = true;
        r.image = project_state(f, s);
        return r;
    }
    const Crossing& P = r.s2.front();
    const Vec n = boundary_normal(f, beta, P.point);
    const double vn = P.velocity.dot(n);
    if (std::abs(vn) < 1e-9) throw Error(ErrorCode::TangentialIntersection, "geodesic touches the boundary");
    r.image = project_state(f, SurfaceState{P.point, P.velocity - 2 * vn * n});

    const double reach = 2 * window + 2 * f.scale();
    std::vector<Crossing> img = geodesic_crossings(f, beta, domain_side, r.image, reach, opt);
    img.push_back({r.image.x, r.image.v, 0, true});
    for (const auto& c : geodesic_crossings(f, beta, domain_side, r.image, -reach, opt)) img.push_back(c);

    for (const auto& q : r.s2) {
        const Vec m = boundary_normal(f, beta, q.point);
        const Vec reflected = q.velocity - 2 * q.velocity.dot(m) * m;
        double best = std::numeric_limits<double>::infinity(), law = best;
        for (const auto& c : img) {
            const double d = (c.point - q.point).norm() / f.scale();
            if (d < best) {
                best = d;
                law = std::min((c.velocity - reflected).norm(), (c.velocity + reflected).norm());
            }
        }
        r.max_s2_distance = std::max(r.max_s2_distance, best);
        r.max_reflection_residual = std::max(r.max_reflection_residual, law);
    }
    r.min_s1_distance = std::numeric_limits<double>::infinity();
    for (const auto& q : r.s1)
        for (const auto& c : img)
            r.min_s1_distance = std::min(r.min_s1_distance, (c.point - q.point).norm() / f.scale());
    return r;
}

double geodesic_line_distance(const ConfocalFamily& f, double beta, int domain_side, const SurfaceState& s,
                              const SurfaceState& probe, double window, const GeodesicOptions& opt) {
    double best = std::numeric_limits<double>::infinity();
    for (double len : {window, -window})
        for (const auto& c : geodesic_crossings(f, beta, domain_side, s, len, opt))
            best = std::min(best, state_distance(f, c.point, c.velocity, probe.x, probe.v));
    return best;
}

std::optional<SurfaceState> surface_state_with_caustic(const ConfocalFamily& f, const Vec& x0, double alpha,
                                                       int branch) {
    require_surface(f);
    const Vec x = project_state(f, SurfaceState{x0, Vec::Unit(3, 0) + Vec::Unit(3, 1) + Vec::Unit(3, 2)}).x;
    const Vec n = f.grad(0, x).normalized();
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(n(i)) < std::abs(n(k))) k = i;
    Vec e1 = Vec::Unit(3, k);
    e1 = (e1 - e1.dot(n) * n).normalized();
    Vec e2(3);
    e2 << n(1) * e1(2) - n(2) * e1(1), n(2) * e1(0) - n(0) * e1(2), n(0) * e1(1) - n(1) * e1(0);
    auto phi = [&](const Vec& y) { return line_discriminant(f, alpha, Ray{x, y}); };
    const double A = phi(e1), C = phi(e2), B = (phi(e1 + e2) - A - C) / 2;
    double c, s;
    if (std::abs(C) > 1e-14 * (std::abs(A) + std::abs(B))) {
        const double disc = B * B - A * C;
        if (disc < 0) return std::nullopt;
        const double t = (-B + (branch < 0 ? -1 : 1) * std::sqrt(disc)) / C;
        c = 1 / std::sqrt(1 + t * t);
        s = t * c;
    } else {
        c = 0;
        s = 1;
    }
    return project_state(f, SurfaceState{x, c * e1 + s * e2});
}

}  // namespace confocal
