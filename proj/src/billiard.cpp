#include "confocal/billiard.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace confocal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Wall {
    double lambda = 0;
    int coordinate = -1;  // elliptic coordinate index for quadric walls
    bool plane = false;
    int axis = 0;
    int sign = 1;
};

struct Hit {
    double t = kInf;
    int wall = -1;
    bool tangent = false;
};

double caustic_distance(const CausticSet& a, const CausticSet& b, double scale) {
    if (a.alphas.size() != b.alphas.size()) return kInf;
    double d = 0;
    for (std::size_t k = 0; k < a.alphas.size(); ++k) d = std::max(d, std::abs(a.alphas[k] - b.alphas[k]) / scale);
    return d;
}

Vec snap_to_quadric(const ConfocalFamily& f, double lambda, const Vec& x) {
    const double q = f.Q(lambda, x);
    return q > 0 ? Vec(x / std::sqrt(q)) : x;
}

Side side_of(const ConfocalFamily& f, double lambda, const Vec& x, const Vec& v_in) {
    return f.grad(lambda, x).dot(v_in) > 0 ? Side::Inside : Side::Outside;
}

void record_caustics(const ConfocalFamily& f, Trajectory& traj, const Vec& p, const Vec& v) {
    const CausticSet c = caustics_of_line(f, Ray{p, v});
    if (traj.caustics.alphas.empty()) {
        traj.caustics = c;
        return;
    }
    traj.max_caustic_drift = std::max(traj.max_caustic_drift, caustic_distance(traj.caustics, c, f.a(0)));
}

}  // namespace

void DomainSpec::validate() const {
    const std::size_t d = family.dim();
    if (bounds.size() != d) throw Error(ErrorCode::ConfigError, "need one bound per elliptic coordinate");
    for (std::size_t s = 0; s < d; ++s) {
        const double lo_limit = s + 1 < d ? family.a(s + 1) : -kInf;
        const double hi_limit = family.a(s);
        const auto& b = bounds[s];
        for (const auto& e : {b.lower, b.upper}) {
            if (!e) continue;
            if (!std::isfinite(*e)) throw Error(ErrorCode::NonfiniteInput, "nonfinite bound");
            if (*e < lo_limit || *e > hi_limit)
                throw Error(ErrorCode::OutOfRange, "bound outside the range of its elliptic coordinate");
            if (family.is_axis(*e))
                throw Error(ErrorCode::DegenerateQuadric, "degenerate quadric as a wall; use a plane wall");
        }
        if (b.lower && b.upper && !(*b.lower < *b.upper))
            throw Error(ErrorCode::OutOfRange, "empty coordinate range");
    }
    for (const auto& p : planes)
        if (p.axis < 0 || p.axis >= static_cast<int>(d) || (p.sign != 1 && p.sign != -1))
            throw Error(ErrorCode::ConfigError, "bad plane wall");
}

bool DomainSpec::contains(const Vec& x, double tol) const {
    const auto ec = elliptic_coordinates(family, x);
    const double t = tol * family.a(0);
    for (std::size_t s = 0; s < bounds.size(); ++s) {
        if (bounds[s].lower && ec.lambda[s] < *bounds[s].lower - t) return false;
        if (bounds[s].upper && ec.lambda[s] > *bounds[s].upper + t) return false;
    }
    for (const auto& p : planes)
        if (p.sign * x(p.axis) < -tol * family.scale()) return false;
    return true;
}

DomainSpec ellipsoid_domain(const ConfocalFamily& family, double beta) {
    DomainSpec s{family, std::vector<CoordinateBound>(family.dim()), {}};
    s.bounds.back().lower = beta;
    s.validate();
    return s;
}

DomainSpec annulus_domain(const ConfocalFamily& family, double beta_outer, double beta_inner) {
    DomainSpec s{family, std::vector<CoordinateBound>(family.dim()), {}};
    s.bounds.back().lower = beta_outer;
    s.bounds.back().upper = beta_inner;
    s.validate();
    return s;
}

void GameSpec::validate() const {
    const std::size_t k = betas.size();
    if (k == 0 || signature.size() != k) throw Error(ErrorCode::ConfigError, "betas and signature differ in length");
    bool all_ellipsoids = true;
    for (std::size_t s = 0; s < k; ++s) {
        if (signature[s] != 1 && signature[s] != -1) throw Error(ErrorCode::ConfigError, "signature must be +-1");
        if (!std::isfinite(betas[s])) throw Error(ErrorCode::NonfiniteInput, "nonfinite beta");
        if (family.is_axis(betas[s])) throw Error(ErrorCode::DegenerateQuadric, "degenerate quadric in a game");
        if (classify(family, betas[s]).kind != QuadricKind::Ellipsoid) all_ellipsoids = false;
    }
    if (!all_ellipsoids) return;
    for (std::size_t s = 0; s < k; ++s) {
        if (signature[s] != -1) continue;
        const std::size_t prev = (s + k - 1) % k, next = (s + 1) % k;
        if (signature[prev] != 1 || signature[next] != 1 || !(betas[prev] < betas[s]) || !(betas[next] < betas[s]))
            throw Error(ErrorCode::UnboundedGame, "outside bounce must sit between inside bounces on larger ellipsoids");
    }
}

const char* side_name(Side s) { return s == Side::Inside ? "inside" : "outside"; }

Trajectory simulate_domain(const DomainSpec& spec, const Ray& ray0, int max_bounces, const SimulationOptions& opt) {
    spec.validate();
    const ConfocalFamily& f = spec.family;
    const std::size_t d = f.dim();
    if (static_cast<std::size_t>(ray0.point.size()) != d) throw Error(ErrorCode::OutOfRange, "ray dimension");
    std::vector<Wall> walls;
    for (std::size_t s = 0; s < d; ++s)
        for (const auto& e : {spec.bounds[s].lower, spec.bounds[s].upper})
            if (e) walls.push_back(Wall{*e, static_cast<int>(s), false, 0, 1});
    for (const auto& p : spec.planes) walls.push_back(Wall{f.a(p.axis), -1, true, p.axis, p.sign});
    if (walls.empty()) throw Error(ErrorCode::ConfigError, "domain without walls");
    if (opt.check_domain && !spec.contains(ray0.point, opt.drift_check))
        throw Error(ErrorCode::EscapedDomain, "start point outside the domain");

    const double eps = opt.eps * f.scale();
    Trajectory traj;
    traj.tallies.assign(walls.size(), 0);
    Vec p = ray0.point;
    Vec v = ray0.direction.normalized();
    record_caustics(f, traj, p, v);
    for (int b = 0; b < max_bounces; ++b) {
        Hit best, second;
        for (std::size_t w = 0; w < walls.size(); ++w) {
            Hit h;
            if (walls[w].plane) {
                const double vn = walls[w].sign * v(walls[w].axis);
                if (vn < 0) h.t = -p(walls[w].axis) / v(walls[w].axis);
            } else {
                const Intersection I = intersect(f, walls[w].lambda, Ray{p, v});
                for (double t : I.t)
                    if (t > eps) {
                        h.t = t;
                        h.tangent = I.tangent;
                        break;
                    }
            }
            if (!(h.t > eps)) continue;
            h.wall = static_cast<int>(w);
            if (h.t < best.t) {
                second = best;
                best = h;
            } else if (h.t < second.t) {
                second = h;
            }
        }
        if (best.wall < 0) throw Error(ErrorCode::EscapedDomain, "ray leaves the domain without hitting a wall");
        if (best.tangent) throw Error(ErrorCode::StalledRay, "tangential contact with a wall");
        if (second.wall >= 0 && second.t - best.t <= eps) throw Error(ErrorCode::StalledRay, "corner hit");
        if (opt.check_domain && !spec.contains(p + 0.5 * best.t * v, opt.drift_check))
            throw Error(ErrorCode::EscapedDomain, "segment left the domain");
        const Wall& w = walls[best.wall];
        Vec q = p + best.t * v;
        Bounce rec;
        rec.wall = best.wall;
        rec.plane = w.plane;
        rec.lambda = w.lambda;
        Vec out;
        if (w.plane) {
            q(w.axis) = 0;
            out = v;
            out(w.axis) = -out(w.axis);
            rec.side = Side::Inside;
        } else {
            q = snap_to_quadric(f, w.lambda, q);
            rec.side = side_of(f, w.lambda, q, v);
            out = reflect(f, w.lambda, q, v).normalized();
        }
        if (!traj.bounces.empty()) traj.bounces.back().length = (q - p).norm();
        rec.point = q;
        rec.direction = out;
        traj.bounces.push_back(rec);
        ++traj.tallies[best.wall];
        p = q;
        v = out;
        record_caustics(f, traj, p, v);
    }
    return traj;
}

Trajectory simulate_game(const GameSpec& spec, const Ray& ray0, int rounds, const SimulationOptions& opt) {
    spec.validate();
    const ConfocalFamily& f = spec.family;
    const double eps = opt.eps * f.scale();
    const std::size_t k = spec.betas.size();
    Trajectory traj;
    traj.tallies.assign(k, 0);
    Vec p = ray0.point;
    Vec v = ray0.direction.normalized();
    record_caustics(f, traj, p, v);
    for (int r = 0; r < rounds; ++r)
        for (std::size_t s = 0; s < k; ++s) {
            const double beta = spec.betas[s];
            const Intersection I = intersect(f, beta, Ray{p, v});
            double chosen = kInf;
            for (double t : I.t) {
                if (!(t > eps)) continue;
                const Vec q = p + t * v;
                if (static_cast<int>(side_of(f, beta, q, v)) == spec.signature[s]) {
                    chosen = t;
                    break;
                }
            }
            if (!std::isfinite(chosen)) throw Error(ErrorCode::NoSuchBounce, "required bounce does not exist");
            if (I.tangent) throw Error(ErrorCode::StalledRay, "tangential contact in a game");
            Vec q = snap_to_quadric(f, beta, p + chosen * v);
            Bounce rec;
            rec.wall = static_cast<int>(s);
            rec.lambda = beta;
            rec.side = side_of(f, beta, q, v);
            rec.point = q;
            rec.direction = reflect(f, beta, q, v).normalized();
            if (!traj.bounces.empty()) traj.bounces.back().length = (q - p).norm();
            traj.bounces.push_back(rec);
            ++traj.tallies[s];
            p = q;
            v = rec.direction;
            record_caustics(f, traj, p, v);
        }
    return traj;
}

std::optional<Closure> detect_closure(const Trajectory& traj, double tol, bool allow_central, double scale) {
    if (traj.bounces.size() < 2) return std::nullopt;
    const Bounce& b0 = traj.bounces.front();
    for (std::size_t n = 1; n < traj.bounces.size(); ++n) {
        const Bounce& bn = traj.bounces[n];
        const double e = std::max((bn.point - b0.point).norm() / scale, (bn.direction - b0.direction).norm());
        if (e < tol) return Closure{static_cast<int>(n), e, false};
        if (allow_central) {
            const double c = std::max((bn.point + b0.point).norm() / scale, (bn.direction + b0.direction).norm());
            if (c < tol) return Closure{static_cast<int>(n), c, true};
        }
    }
    return std::nullopt;
}

double caustic_drift(const ConfocalFamily& family, const Trajectory& traj) {
    if (traj.bounces.empty()) return 0;
    const CausticSet c0 = caustics_of_line(family, Ray{traj.bounces[0].point, traj.bounces[0].direction});
    double d = 0;
    for (const auto& b : traj.bounces)
        d = std::max(d, caustic_distance(c0, caustics_of_line(family, Ray{b.point, b.direction}), family.a(0)));
    return d;
}

std::optional<Ray> ray_with_caustics(const ConfocalFamily& f, const std::vector<double>& caustics,
                                     std::mt19937_64& rng, int attempts) {
    const std::size_t d = f.dim();
    if (d < 2 || d > 3) throw Error(ErrorCode::OutOfRange, "random rays with caustics are implemented for d = 2, 3");
    if (caustics.size() != d - 1) throw Error(ErrorCode::OutOfRange, "need d - 1 caustics");
    const double a0 = caustics[0];
    const QuadricParam qp = classify(f, a0);
    if (qp.kind == QuadricKind::Degenerate) throw Error(ErrorCode::DegenerateQuadric, "degenerate caustic");
    std::uniform_real_distribution<double> U(0, 1);
    // coordinate index holding a0: lambda_s in (a_{s+1}, a_s), lambda_d in (0, a_d)
    int slot = 0;
    for (std::size_t s = 0; s < d; ++s) {
        const double lo = s + 1 < d ? f.a(s + 1) : 0.0;
        if (a0 > lo && a0 < f.a(s)) slot = static_cast<int>(s);
    }
    if (a0 <= 0) return std::nullopt;
    for (int it = 0; it < attempts; ++it) {
        std::vector<double> lam(d);
        for (std::size_t s = 0; s < d; ++s) {
            const double lo = s + 1 < d ? f.a(s + 1) : 0.0;
            lam[s] = static_cast<int>(s) == slot ? a0 : lo + (f.a(s) - lo) * (0.02 + 0.96 * U(rng));
        }
        std::vector<int> signs(d);
        for (auto& sg : signs) sg = U(rng) < 0.5 ? -1 : 1;
        const Vec p = cartesian_from_elliptic(f, lam, signs);
        const Vec n = f.grad(a0, p).normalized();
        Vec dir;
        if (d == 2) {
            dir = Vec(2);
            dir << -n(1), n(0);
        } else {
            // orthonormal basis of the tangent plane
            Vec e1 = Vec::Zero(3);
            int k = 0;
            for (int i = 1; i < 3; ++i)
                if (std::abs(n(i)) < std::abs(n(k))) k = i;
            e1(k) = 1;
            e1 = (e1 - e1.dot(n) * n).normalized();
            Vec e2(3);
            e2 << n(1) * e1(2) - n(2) * e1(1), n(2) * e1(0) - n(0) * e1(2), n(0) * e1(1) - n(1) * e1(0);
            const double a1c = caustics[1];
            auto phi = [&](const Vec& y) { return line_discriminant(f, a1c, Ray{p, y}); };
            const double A = phi(e1), C = phi(e2);
            const double B = (phi(e1 + e2) - A - C) / 2;
            double cphi, sphi;
            if (std::abs(C) > 1e-14 * (std::abs(A) + std::abs(B))) {
                const double disc = B * B - A * C;
                if (disc < 0) continue;
                const double t = (-B + (U(rng) < 0.5 ? -1 : 1) * std::sqrt(disc)) / C;
                cphi = 1 / std::sqrt(1 + t * t);
                sphi = t * cphi;
            } else {
                cphi = 0;
                sphi = 1;
            }
            dir = cphi * e1 + sphi * e2;
        }
        if (U(rng) < 0.5) dir = -dir;
        dir.normalize();
        // the caustics of the constructed line must match
        const CausticSet cs = caustics_of_line(f, Ray{p, dir});
        std::vector<double> want = caustics;
        std::sort(want.begin(), want.end());
        bool ok = cs.alphas.size() == want.size();
        for (std::size_t k2 = 0; ok && k2 < want.size(); ++k2)
            ok = std::abs(cs.alphas[k2] - want[k2]) < 1e-7 * f.a(0);
        if (!ok) continue;
        return Ray{p, dir};
    }
    return std::nullopt;
}

namespace {

VirtualVertex check_vertex(const ConfocalFamily& f, double lambda, const Vec& P, const Vec& from, const Vec& to,
                           double tol) {
    VirtualVertex v;
    const Vec din = (P - from).normalized();
    const Vec dout = (to - P).normalized();
    const Vec r = reflect(f, lambda, P, din, ReflectionMode::Real);
    const double real = (r - dout).norm(), virt = (r + dout).norm();
    v.mode = real <= virt ? ReflectionMode::Real : ReflectionMode::Virtual;
    v.residual = std::min(real, virt);
    v.ok = v.residual <= tol;
    return v;
}

}  // namespace

VirtualReport virtual_configuration(const ConfocalFamily& f, double lambda1, double lambda2, const Vec& X1,
                                    const Vec& X2, const Vec& Y1, const Vec& Y2, double tol) {
    VirtualReport rep;
    rep.x1 = check_vertex(f, lambda1, X1, Y1, Y2, tol);
    rep.x2 = check_vertex(f, lambda1, X2, Y1, Y2, tol);
    rep.y1 = check_vertex(f, lambda2, Y1, X1, X2, tol);
    rep.y2 = check_vertex(f, lambda2, Y2, X1, X2, tol);
    rep.configuration = rep.x1.ok && rep.x2.ok && rep.y1.ok && rep.y2.ok;
    return rep;
}

std::optional<PencilQuadruple> pencil_quadruple(const ConfocalFamily& f, double lambda1, double lambda2,
                                                std::mt19937_64& rng, int attempts) {
    const std::size_t d = f.dim();
    std::normal_distribution<double> N(0, 1);
    auto tangency = [&](const Vec& h, const Vec& g, double lambda) {
        double s = 0;
        for (std::size_t i = 0; i < d; ++i) s += (f.a(i) - lambda) * h(i) * g(i);
        return s - h(d) * g(d);
    };
    auto solve = [&](const Vec& Ha, const Vec& Hb, double lambda, std::vector<Vec>& out) {
        const double A = tangency(Ha, Ha, lambda), B = tangency(Ha, Hb, lambda), C = tangency(Hb, Hb, lambda);
        const double disc = B * B - A * C;
        if (disc <= 1e-12 * (B * B + std::abs(A * C)) || std::abs(C) < 1e-12) return false;
        for (int sg : {-1, 1}) {
            const double t = (-B + sg * std::sqrt(disc)) / C;
            out.push_back(Ha + t * Hb);
        }
        return true;
    };
    for (int it = 0; it < attempts; ++it) {
        Vec Ha(d + 1), Hb(d + 1);
        for (std::size_t i = 0; i <= d; ++i) {
            Ha(i) = N(rng);
            Hb(i) = N(rng);
        }
        std::vector<Vec> h1, h2;
        if (!solve(Ha, Hb, lambda1, h1) || !solve(Ha, Hb, lambda2, h2)) continue;
        auto point = [&](const Vec& h, double lambda) {
            Vec x(d);
            for (std::size_t i = 0; i < d; ++i) x(i) = (f.a(i) - lambda) * h(i) / h(d);
            return x;
        };
        PencilQuadruple q;
        q.X1 = point(h1[0], lambda1);
        q.X2 = point(h1[1], lambda1);
        q.Y1 = point(h2[0], lambda2);
        q.Y2 = point(h2[1], lambda2);
        const double sep = std::min({(q.X1 - q.X2).norm(), (q.Y1 - q.Y2).norm(), (q.X1 - q.Y1).norm(),
                                     (q.X1 - q.Y2).norm(), (q.X2 - q.Y1).norm(), (q.X2 - q.Y2).norm()});
        const double big = std::max({q.X1.norm(), q.X2.norm(), q.Y1.norm(), q.Y2.norm()});
        if (sep < 1e-2 * f.scale() || big > 1e2 * f.scale()) continue;
        for (const Vec* h : {&h1[0], &h1[1], &h2[0], &h2[1]}) q.planes.push_back(normalize_hyperplane(*h));
        return q;
    }
    return std::nullopt;
}

MapStep billiard_map_step(const ConfocalFamily& f, const XYZState& s) {
    const std::size_t d = f.dim();
    Vec Ax(d);
    for (std::size_t i = 0; i < d; ++i) Ax(i) = s.x(i) / f.a(i);
    if (std::abs(Ax.dot(s.x) - 1) > 1e-9) throw Error(ErrorCode::NotOnQuadric, "(Ax, x) != 1");
    if (std::abs(s.y.norm() - 1) > 1e-9) throw Error(ErrorCode::DegenerateLine, "momentum is not a unit vector");
    MapStep out;
    out.nu = -2 * Ax.dot(s.y) / Ax.dot(Ax);
    if (std::abs(out.nu) < 1e-14) throw Error(ErrorCode::TangentStep, "nu vanishes");
    const Vec y1 = s.y + out.nu * Ax;
    Vec Ay(d);
    for (std::size_t i = 0; i < d; ++i) Ay(i) = y1(i) / f.a(i);
    out.mu = -2 * Ay.dot(s.x) / Ay.dot(y1);
    if (std::abs(out.mu) < 1e-14 * f.scale()) throw Error(ErrorCode::TangentStep, "mu vanishes");
    out.next.x = s.x + out.mu * y1;
    out.next.y = y1;
    return out;
}

std::vector<double> xyz_invariants(const std::vector<double>& J2, const Vec& x, const Vec& y) {
    const std::size_t d = J2.size();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (J2[i] == J2[j]) throw Error(ErrorCode::RepeatedAxis, "repeated axis");
    Vec Jy(d);
    for (std::size_t i = 0; i < d; ++i) Jy(i) = std::sqrt(J2[i]) * y(i);
    std::vector<double> F(d);
    for (std::size_t i = 0; i < d; ++i) {
        double s = x(i) * x(i);
        for (std::size_t j = 0; j < d; ++j) {
            if (j == i) continue;
            const double w = x(i) * Jy(j) - x(j) * Jy(i);
            s += w * w / (J2[i] - J2[j]);
        }
        F[i] = s;
    }
    return F;
}

std::vector<double> xyz_invariants(const ConfocalFamily& family, const Vec& x, const Vec& y) {
    return xyz_invariants(family.axes(), x, y);
}

std::vector<double> invariant_caustics(const std::vector<double>& J2, const std::vector<double>& F) {
    const std::size_t d = J2.size();
    Poly<double> num(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        Poly<double> term{F[i]};
        for (std::size_t j = 0; j < d; ++j)
            if (j != i) term = poly_mul(term, Poly<double>{-J2[j], 1.0});
        num = poly_add(num, term);
    }
    return real_roots(num);
}

}  // namespace confocal
