#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

#include "confocal/cayley.hpp"
#include "confocal/geodesic.hpp"
#include "confocal/jacobian.hpp"

using namespace confocal;

namespace {

const ConfocalFamily& family() {
    static const ConfocalFamily f({4, 2, 1});
    return f;
}

Vec vec3(double a, double b, double c) {
    Vec x(3);
    x << a, b, c;
    return x;
}

// Point of Q_0 with elliptic coordinates (l1, l2) in the octant x > 0.
Vec surface_point(double l1, double l2) { return cartesian_from_elliptic(family(), {l1, l2, 0}, {1, 1, 1}); }

// gamma in (a3, alpha) with n * int_gamma^alpha x dx / y = target, by bisection
double solve_boundary(double alpha, int n, double target) {
    const auto m = surface_model(family(), {alpha});
    double lo = family().a(2), hi = alpha;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (n * abel_integral(m, 1, mid, alpha) > target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

SurfaceState band_state(double gamma, double alpha, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.1, 0.9);
    const double l1 = 2 + 2 * U(rng), l2 = gamma + (alpha - gamma) * U(rng);
    return *surface_state_with_caustic(family(), surface_point(l1, l2), alpha, U(rng) < 0.5 ? -1 : 1);
}

Vec cross(const Vec& a, const Vec& b) {
    return vec3(a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0));
}

}  // namespace

TEST(GeodesicStep, ConstraintsAndCausticOverLongRun) {
    auto s = surface_state_with_caustic(family(), surface_point(3.1, 1.3), 1.6);
    ASSERT_TRUE(s);
    auto run = geodesic_flow(family(), *s, 2e-3, 10000);
    EXPECT_LT(run.max_residual.on_quadric, 1e-11);
    EXPECT_LT(run.max_residual.tangent, 1e-11);
    EXPECT_LT(run.max_caustic_drift, 1e-8);
    EXPECT_NEAR(surface_caustic(family(), run.final), 1.6, 1e-8);
}

TEST(GeodesicStep, PrincipalSectionIsInvariant) {
    SurfaceState s{vec3(2, 0, 0), vec3(0, 0.6, 0.8)};
    s.v = vec3(0, 1, 0);
    for (int k = 0; k < 3000; ++k) {
        s = geodesic_step(family(), s, 2e-3);
        ASSERT_EQ(s.x(2), 0.0);
        ASSERT_EQ(s.v(2), 0.0);
    }
}

TEST(GeodesicStep, PrincipalSectionPerimeter) {
    // perimeter of the ellipse with semi-axes 2 and sqrt(2)
    auto speed = [](double t) { return std::sqrt(4 * std::sin(t) * std::sin(t) + 2 * std::cos(t) * std::cos(t)); };
    const double perimeter =
        4 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, 0, M_PI / 2, 15, 1e-15);
    const double ds = 1e-3;
    SurfaceState s{vec3(2, 0, 0), vec3(0, 1, 0)};
    double length = 0;
    // run past three quarters, then stop at the return to x_2 = 0 from below
    while (length < 0.75 * perimeter) {
        s = geodesic_step(family(), s, ds);
        length += ds;
    }
    SurfaceState prev = s;
    while (s.x(1) < 0) {
        prev = s;
        s = geodesic_step(family(), s, ds);
        length += ds;
    }
    double lo = 0, hi = ds;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (geodesic_step(family(), prev, mid).x(1) < 0 ? lo : hi) = mid;
    }
    length += hi - ds;
    EXPECT_NEAR(length, perimeter, 1e-8);
}

TEST(GeodesicStep, CausticOfSurfaceLine) {
    for (double alpha : {1.2, 1.6, 1.9, 2.5, 3.5}) {
        const Vec x = alpha < 2 ? surface_point(3.0, 0.5 * (1 + alpha)) : surface_point(0.5 * (alpha + 4), 1.4);
        auto s = surface_state_with_caustic(family(), x, alpha);
        ASSERT_TRUE(s) << alpha;
        EXPECT_NEAR(surface_caustic(family(), *s), alpha, 1e-9);
        const auto c = caustics_of_line(family(), Ray{s->x, s->v});
        EXPECT_NEAR(c.alphas.front(), 0.0, 1e-9);
    }
}

TEST(GeodesicBilliard, BoundaryNeverMetGivesPureGeodesic) {
    GeodesicOptions opt;
    opt.max_length = 20;
    // the equator x_3 = 0 stays outside the hyperboloid Q_1.5
    auto t = geodesic_billiard(family(), 1.5, SurfaceState{vec3(2, 0, 0), vec3(0, 1, 0)}, 10, opt);
    EXPECT_TRUE(t.bounces.empty());
    EXPECT_NEAR(t.length, 20 * family().scale(), 1e-2);
}

TEST(GeodesicBilliard, CausticConservedAcrossReflections) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 5; ++k) {
        const SurfaceState s = band_state(1.3, 1.7, rng);
        auto t = geodesic_billiard(family(), 1.3, s, 40);
        ASSERT_EQ(t.bounces.size(), 40u);
        EXPECT_NEAR(t.alpha, 1.7, 1e-9);
        EXPECT_LT(t.max_caustic_drift, 1e-8);
        EXPECT_LT(t.max_residual.on_quadric, 1e-9);
        EXPECT_LT(t.max_residual.tangent, 1e-9);
        for (const auto& b : t.bounces) EXPECT_NEAR(family().Q(1.3, b.point), 1.0, 1e-9);
    }
}

TEST(GeodesicBilliard, TimeReversalRetraces) {
    std::mt19937_64 rng(6);
    const SurfaceState s = band_state(1.3, 1.7, rng);
    auto fwd = geodesic_billiard(family(), 1.3, s, 101);
    const auto& last = fwd.bounces.back();
    // incoming velocity at the last bounce, reversed
    const Vec n0 = family().grad(0, last.point).normalized();
    Vec n = family().grad(1.3, last.point);
    n = (n - n.dot(n0) * n0).normalized();
    const Vec incoming = last.velocity - 2 * last.velocity.dot(n) * n;
    auto back = geodesic_billiard(family(), 1.3, SurfaceState{last.point, -incoming}, 100);
    ASSERT_EQ(back.bounces.size(), 100u);
    double worst = 0;
    for (int k = 0; k < 100; ++k)
        worst = std::max(worst, (back.bounces[k].point - fwd.bounces[99 - k].point).norm());
    EXPECT_LT(worst, 1e-7);
}

TEST(GeodesicBilliard, StalledOnTangentStart) {
    // on the boundary curve, moving along it
    const Vec x = surface_point(3.0, 1.3);
    const Vec n0 = family().grad(0, x).normalized();
    Vec nb = family().grad(1.3, x);
    nb = (nb - nb.dot(n0) * n0).normalized();
    const Vec tangent = cross(n0, nb).normalized();
    EXPECT_THROW(geodesic_billiard(family(), 1.3, SurfaceState{x, tangent}, 3), Error);
}

TEST(GeodesicBilliard, LatticeConditionInstanceIsPeriodic) {
    // n bounces, one turn around the x_3 axis: n * int_gamma^alpha x dx / y = 2 int_a2^a1 x dx / y
    const double alpha = 1.6;
    const int n = 5;
    const auto m = surface_model(family(), {alpha});
    const double gamma = solve_boundary(alpha, n, 2 * abel_integral(m, 1, 2, 4));
    auto rep = surface_game_condition(family(), alpha, std::vector<double>(n, gamma), std::vector<int>(n, 1));
    EXPECT_EQ(rep.verdict.verdict, Verdict::Satisfied);
    std::mt19937_64 rng(8);
    for (int k = 0; k < 3; ++k) {
        auto t = geodesic_billiard(family(), gamma, band_state(gamma, alpha, rng), n + 1);
        auto c = detect_surface_closure(family(), t, 1e-5);
        ASSERT_TRUE(c);
        EXPECT_EQ(c->period, n);
    }
    // slightly off the instance the game fails and the orbit stays open
    auto off = surface_game_condition(family(), alpha, std::vector<double>(n, gamma + 1e-3), std::vector<int>(n, 1));
    EXPECT_EQ(off.verdict.verdict, Verdict::NotSatisfied);
    auto t = geodesic_billiard(family(), gamma + 1e-3, band_state(gamma + 1e-3, alpha, rng), n + 1);
    EXPECT_FALSE(detect_surface_closure(family(), t, 1e-5));
}

TEST(GeodesicBilliard, OnQuadricSearchMatchesAbelSolution) {
    auto inst = find_on_quadric_instance({4, 2, 1}, 9);
    ASSERT_TRUE(inst);
    // independent root: 9 int_gamma^alpha (dx, x dx) / y = 2 * 2 int_a3^alpha + 2 int_a2^a1
    auto F = [](double g, double a) {
        const auto m = surface_model(family(), {a});
        Eigen::Vector2d r;
        for (int i = 0; i < 2; ++i)
            r(i) = 9 * abel_integral(m, i, g, a) - 4 * abel_integral(m, i, 1, a) - 2 * abel_integral(m, i, 2, 4);
        return r;
    };
    EXPECT_LT(F(inst->gamma, inst->alpha).norm(), 1e-8);
}

TEST(GeodesicBilliard, OnQuadricInstanceClosesInNBounces) {
    // the sufficient condition of the surface example, closure checked by simulation
    auto inst = find_on_quadric_instance({4, 2, 1}, 9);
    ASSERT_TRUE(inst);
    std::mt19937_64 rng(10);
    auto t = geodesic_billiard(family(), inst->gamma, band_state(inst->gamma, inst->alpha, rng), 10);
    const double err = std::max((t.bounces[9].point - t.bounces[0].point).norm() / family().scale(),
                                (t.bounces[9].velocity - t.bounces[0].velocity).norm());
    EXPECT_LT(err, 1e-5);
}

TEST(GeodesicBilliard, OnQuadricInstanceReturnsToTheSameGeodesic) {
    auto inst = find_on_quadric_instance({4, 2, 1}, 9);
    ASSERT_TRUE(inst);
    std::mt19937_64 rng(11);
    const SurfaceState s = band_state(inst->gamma, inst->alpha, rng);
    auto t = geodesic_billiard(family(), inst->gamma, s, 10);
    const SurfaceState b0{t.bounces[0].point, t.bounces[0].velocity}, b9{t.bounces[9].point, t.bounces[9].velocity};
    EXPECT_LT(geodesic_line_distance(family(), inst->gamma, -1, b0, b9, 80), 1e-7);
}

TEST(TBeta, IdentityWithoutCrossing) {
    auto r = t_beta(family(), 1.5, 1, SurfaceState{vec3(2, 0, 0), vec3(0, 1, 0)}, 20);
    EXPECT_TRUE(r.identity);
    EXPECT_LT((r.image.x - vec3(2, 0, 0)).norm(), 1e-15);
}

TEST(TBeta, ImageContainsAllExitPoints) {
    std::mt19937_64 rng(12);
    double farthest_s1 = 0;
    for (int k = 0; k < 4; ++k) {
        const double alpha = 1.5 + 0.1 * k, gamma = 1.2 + 0.05 * k;
        const SurfaceState s = band_state(gamma, alpha, rng);
        auto r = t_beta(family(), gamma, -1, s, 30);
        ASSERT_FALSE(r.identity);
        ASSERT_GE(r.s2.size(), 3u);
        EXPECT_LT(r.max_s2_distance, 1e-7);
        EXPECT_LT(r.max_reflection_residual, 1e-7);
        EXPECT_NEAR(surface_caustic(family(), r.image), alpha, 1e-8);
        farthest_s1 = std::max(farthest_s1, r.min_s1_distance);
    }
    // the image need not pass through the entry points
    EXPECT_GT(farthest_s1, 1e-3);
}

TEST(TBeta, PorismOnSatisfiedInstance) {
    // T^3 = id on lines: 3 int_gamma^alpha x dx / y = 2 int_a3^alpha x dx / y
    const double alpha = 1.6;
    const int n = 3;
    const auto m = surface_model(family(), {alpha});
    const double gamma = solve_boundary(alpha, n, 2 * abel_integral(m, 1, 1, alpha));
    std::mt19937_64 rng(13);
    for (int k = 0; k < 6; ++k) {
        const SurfaceState g = band_state(gamma, alpha, rng);
        SurfaceState img = g;
        for (int j = 0; j < n; ++j) img = t_beta(family(), gamma, -1, img, 12).image;
        EXPECT_LT(geodesic_line_distance(family(), gamma, -1, g, img, 80), 1e-7) << k;
    }
    // away from the instance the map has no period 3
    const SurfaceState g = band_state(gamma + 0.01, alpha, rng);
    SurfaceState img = g;
    for (int j = 0; j < n; ++j) img = t_beta(family(), gamma + 0.01, -1, img, 12).image;
    EXPECT_GT(geodesic_line_distance(family(), gamma + 0.01, -1, g, img, 80), 1e-3);
}

TEST(TBeta, TangentialIntersectionRejected) {
    // geodesic along the boundary direction at a boundary point
    const Vec x = surface_point(3.0, 1.3);
    const Vec n0 = family().grad(0, x).normalized();
    Vec nb = family().grad(1.3, x);
    nb = (nb - nb.dot(n0) * n0).normalized();
    const Vec tangent = cross(n0, nb).normalized();
    bool thrown = false;
    try {
        t_beta(family(), 1.3, -1, SurfaceState{x, tangent}, 5);
    } catch (const Error& e) {
        thrown = e.code() == ErrorCode::TangentialIntersection;
    }
    EXPECT_TRUE(thrown);
}
