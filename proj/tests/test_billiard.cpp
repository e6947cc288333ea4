#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "confocal/billiard.hpp"
#include "confocal/cayley.hpp"

using namespace confocal;

namespace {

Vec vec(std::initializer_list<double> v) {
    Vec x(v.size());
    int i = 0;
    for (double c : v) x(i++) = c;
    return x;
}

Vec random_unit(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> n(0, 1);
    Vec v(d);
    for (int i = 0; i < d; ++i) v(i) = n(rng);
    return v / v.norm();
}

Vec random_inside(std::mt19937_64& rng, const ConfocalFamily& f, double shrink = 0.8) {
    std::uniform_real_distribution<double> U(-1, 1);
    for (;;) {
        Vec x(f.dim());
        for (std::size_t i = 0; i < f.dim(); ++i) x(i) = U(rng) * std::sqrt(f.a(i));
        if (f.Q(0, x) < shrink * shrink) return x;
    }
}

}  // namespace

TEST(Domain, Validation) {
    ConfocalFamily f({2, 1});
    DomainSpec bad{f, {CoordinateBound{}, CoordinateBound{1.5, std::nullopt}}, {}};
    EXPECT_THROW(bad.validate(), Error);
    DomainSpec axis{f, {CoordinateBound{}, CoordinateBound{std::nullopt, 1.0}}, {}};
    EXPECT_THROW(axis.validate(), Error);
    EXPECT_NO_THROW(ellipsoid_domain(f).validate());
    EXPECT_TRUE(ellipsoid_domain(f).contains(vec({0.5, 0.2}), 1e-12));
    EXPECT_FALSE(ellipsoid_domain(f).contains(vec({1.5, 0.2}), 1e-12));
}

TEST(SimulateDomain, AxisOrbitHasPeriodTwo) {
    ConfocalFamily f({2, 1});
    auto t = simulate_domain(ellipsoid_domain(f), make_ray(vec({0, 0}), vec({1, 0})), 6);
    ASSERT_EQ(t.bounces.size(), 6u);
    EXPECT_NEAR(t.bounces[0].point(0), std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(t.bounces[1].point(0), -std::sqrt(2.0), 1e-14);
    auto c = detect_closure(t, 1e-12, false, f.scale());
    ASSERT_TRUE(c);
    EXPECT_EQ(c->period, 2);
    EXPECT_LT(c->error, 1e-14);
    EXPECT_NEAR(t.bounces[0].length, 2 * std::sqrt(2.0), 1e-14);
}

TEST(SimulateDomain, CausticConservedOverManyBounces) {
    std::mt19937_64 rng(7);
    for (auto axes : std::vector<std::vector<double>>{{2, 1}, {5, 3, 1.5}}) {
        ConfocalFamily f(axes);
        for (int k = 0; k < 10; ++k) {
            Ray r = make_ray(random_inside(rng, f), random_unit(rng, static_cast<int>(f.dim())));
            auto t = simulate_domain(ellipsoid_domain(f), r, 200);
            EXPECT_LT(t.max_caustic_drift, 1e-9);
            EXPECT_LT(caustic_drift(f, t), 1e-9);
        }
    }
}

TEST(SimulateDomain, SideFlagFollowsCoordinateExtremum) {
    ConfocalFamily f({5, 3, 1.5});
    std::mt19937_64 rng(9);
    auto t = simulate_domain(annulus_domain(f, 0, 1.0), make_ray(vec({2.0, 0.1, 0.05}), random_unit(rng, 3)), 30);
    for (std::size_t k = 1; k < t.bounces.size(); ++k) {
        const auto& b = t.bounces[k];
        const Vec& prev = t.bounces[k - 1].point;
        const Vec din = (b.point - prev).normalized();
        const double h = 1e-5;
        const double before = elliptic_coordinates(f, b.point - h * din).lambda[2];
        const double after = elliptic_coordinates(f, b.point + h * b.direction).lambda[2];
        const double at = b.lambda;
        if (b.side == Side::Inside) {
            EXPECT_GT(before, at - 1e-12);
            EXPECT_GT(after, at - 1e-12);
        } else {
            EXPECT_LT(before, at + 1e-12);
            EXPECT_LT(after, at + 1e-12);
        }
    }
}

TEST(SimulateDomain, AnnulusBouncesAlternate) {
    ConfocalFamily f({2, 1});
    // caustic inside the inner ellipse: every segment meets both walls
    auto ray = make_ray(vec({std::sqrt(1.05), 0.68}), vec({0, -1}));
    auto t = simulate_domain(annulus_domain(f, 0, 0.9), ray, 60);
    for (std::size_t k = 1; k < t.bounces.size(); ++k) EXPECT_NE(t.bounces[k].wall, t.bounces[k - 1].wall);
    EXPECT_EQ(t.tallies[0], t.tallies[1]);
}

TEST(SimulateDomain, CayleyCausticCloses) {
    ConfocalFamily f({2, 1});
    std::mt19937_64 rng(1);
    for (int n = 3; n <= 6; ++n) {
        const double alpha = find_planar_caustic(2, 1, n);
        auto ray = ray_with_caustics(f, {alpha}, rng);
        ASSERT_TRUE(ray);
        auto t = simulate_domain(ellipsoid_domain(f), *ray, n + 1);
        auto c = detect_closure(t, 1e-7, false, f.scale());
        ASSERT_TRUE(c) << n;
        EXPECT_EQ(c->period, n);
    }
    // irrational rotation number: no closure in 100 bounces
    auto ray = ray_with_caustics(f, {0.3}, rng);
    auto t = simulate_domain(ellipsoid_domain(f), *ray, 100);
    EXPECT_FALSE(detect_closure(t, 1e-5, true, f.scale()));
}

TEST(SimulateDomain, HyperboloidDomainFoldsOntoHalfDomain) {
    // Domain between the sheets of Q_beta inside Q_0, and its half x_1 >= 0 with the plane as a wall.
    ConfocalFamily f({5, 3, 1.5});
    const double beta = 4.0;
    std::vector<CoordinateBound> b(3);
    b[0].lower = beta;
    b[2].lower = 0.0;
    DomainSpec whole{f, b, {}};
    DomainSpec half{f, b, {PlaneWall{0, 1}}};
    std::mt19937_64 rng(4);
    const Ray r = make_ray(vec({0.3, 0.2, 0.1}), random_unit(rng, 3));
    auto tw = simulate_domain(whole, r, 60);
    auto th = simulate_domain(half, r, 200);
    std::vector<Vec> folded, walls;
    for (const auto& bb : tw.bounces) {
        Vec p = bb.point;
        p(0) = std::abs(p(0));
        folded.push_back(p);
    }
    for (const auto& bb : th.bounces)
        if (!bb.plane) walls.push_back(bb.point);
    ASSERT_GE(walls.size(), folded.size());
    for (std::size_t k = 0; k < folded.size(); ++k) EXPECT_LT((folded[k] - walls[k]).norm(), 1e-8) << k;
    EXPECT_LT(th.max_caustic_drift, 1e-9);
}

TEST(Game, SingleEllipsoidIsOrdinaryBilliard) {
    ConfocalFamily f({5, 3, 1.5});
    std::mt19937_64 rng(2);
    const Ray r = make_ray(random_inside(rng, f), random_unit(rng, 3));
    auto g = simulate_game(GameSpec{f, {0.0}, {1}}, r, 40);
    auto d = simulate_domain(ellipsoid_domain(f), r, 40);
    ASSERT_EQ(g.bounces.size(), d.bounces.size());
    for (std::size_t k = 0; k < g.bounces.size(); ++k)
        EXPECT_LT((g.bounces[k].point - d.bounces[k].point).norm(), 1e-10);
}

TEST(Game, BoundednessRule) {
    ConfocalFamily f({5, 3, 1.5});
    EXPECT_THROW((GameSpec{f, {0.0, 0.5}, {-1, 1}}.validate()), Error);
    try {
        GameSpec{f, {0.5, 0.0}, {1, -1}}.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnboundedGame);
    }
    EXPECT_NO_THROW((GameSpec{f, {0.0, 0.5}, {1, -1}}.validate()));
}

TEST(Game, SevenTupleWithSignature) {
    ConfocalFamily f({2, 1});
    const double b1 = 0, b2 = 0.3, b3 = 0.6;
    GameSpec g{f, {b1, b2, b1, b3, b2, b3, b1}, {1, -1, 1, -1, 1, 1, 1}};
    EXPECT_NO_THROW(g.validate());
    // the caustic must lie inside every ellipse for all bounces to exist
    std::mt19937_64 rng(3);
    int ok = 0;
    for (int k = 0; k < 20 && ok == 0; ++k) {
        auto ray = ray_with_caustics(f, {0.8 + 0.15 * k / 20.0}, rng);
        ASSERT_TRUE(ray);
        // start on the outer wall
        auto I = intersect(f, b1, *ray);
        Ray start{ray->point + I.t.front() * ray->direction, ray->direction};
        start.direction = reflect(f, b1, start.point, -ray->direction);
        start.direction = -start.direction;
        try {
            auto t = simulate_game(g, Ray{ray->point, ray->direction}, 20);
            EXPECT_EQ(t.bounces.size(), 140u);
            for (std::size_t s = 0; s < t.bounces.size(); ++s)
                EXPECT_EQ(static_cast<int>(t.bounces[s].side), g.signature[s % 7]);
            for (const auto& b : t.bounces) EXPECT_LT(f.Q(0, b.point), 1 + 1e-9);
            EXPECT_LT(t.max_caustic_drift, 1e-9);
            ++ok;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::NoSuchBounce);
        }
    }
    EXPECT_GT(ok, 0);
}

TEST(Game, MissingBounceErrors) {
    ConfocalFamily f({2, 1});
    // horizontal line above the inner ellipse never meets it
    const Ray r = make_ray(vec({0, 0.9}), vec({1, 0}));
    try {
        simulate_game(GameSpec{f, {0.0, 0.5}, {1, -1}}, r, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoSuchBounce);
    }
}

TEST(RayWithCaustics, ProducesRequestedCaustics) {
    std::mt19937_64 rng(12);
    ConfocalFamily f3({5, 3, 1.5});
    for (auto c : std::vector<std::vector<double>>{{0.5, 2.0}, {0.7, 4.0}, {2.0, 4.0}, {1.0, 2.5}}) {
        auto r = ray_with_caustics(f3, c, rng);
        ASSERT_TRUE(r);
        auto cs = caustics_of_line(f3, *r);
        EXPECT_NEAR(cs.alphas[0], c[0], 1e-8);
        EXPECT_NEAR(cs.alphas[1], c[1], 1e-8);
        EXPECT_LT(f3.Q(0, r->point), 1);
    }
    ConfocalFamily f2({2, 1});
    for (double a : {0.2, 0.9, 1.5}) {
        auto r = ray_with_caustics(f2, {a}, rng);
        ASSERT_TRUE(r);
        EXPECT_NEAR(caustics_of_line(f2, *r).alphas[0], a, 1e-9);
    }
}

TEST(VirtualConfiguration, SymmetricQuadruple) {
    ConfocalFamily f({2, 1});
    // mirror pairs about the x-axis on two confocal ellipses, tangent lines from the pencil of symmetric planes
    const double l1 = 0.5, l2 = 0.0;
    const Vec X1 = vec({std::sqrt(2 - l1), 0}), X2 = vec({-std::sqrt(2 - l1), 0});
    const Vec Y1 = vec({0, 1}), Y2 = vec({0, -1});
    auto rep = virtual_configuration(f, l1, l2, X1, X2, Y1, Y2);
    EXPECT_TRUE(rep.configuration);
}

TEST(VirtualConfiguration, PencilConstructionAndPerturbation) {
    std::mt19937_64 rng(21);
    for (auto axes : std::vector<std::vector<double>>{{2, 1}, {5, 3, 1.5}}) {
        ConfocalFamily f(axes);
        const double l1 = 0.6, l2 = 0.1;  // both ellipsoids, l1 > l2
        int built = 0;
        for (int k = 0; k < 20; ++k) {
            auto q = pencil_quadruple(f, l1, l2, rng);
            ASSERT_TRUE(q);
            ++built;
            EXPECT_TRUE(in_pencil(q->planes));
            auto rep = virtual_configuration(f, l1, l2, q->X1, q->X2, q->Y1, q->Y2);
            EXPECT_TRUE(rep.configuration);
            EXPECT_EQ(rep.y1.mode, ReflectionMode::Real);
            EXPECT_EQ(rep.y2.mode, ReflectionMode::Real);
            EXPECT_EQ(rep.x1.mode, ReflectionMode::Virtual);
            EXPECT_EQ(rep.x2.mode, ReflectionMode::Virtual);
            // move Y2 along its ellipsoid
            Vec t = random_unit(rng, static_cast<int>(f.dim()));
            const Vec n = f.grad(l2, q->Y2).normalized();
            t = (t - t.dot(n) * n).normalized();
            Vec y2 = q->Y2 + 0.05 * f.scale() * t;
            y2 /= std::sqrt(f.Q(l2, y2));
            auto bad = virtual_configuration(f, l1, l2, q->X1, q->X2, q->Y1, y2);
            EXPECT_FALSE(bad.configuration);
            std::vector<Hyperplane> planes{q->planes[0], q->planes[1], q->planes[2], tangent_hyperplane(f, l2, y2)};
            EXPECT_FALSE(in_pencil(planes));
        }
        EXPECT_EQ(built, 20);
    }
}

TEST(VirtualConfiguration, OffQuadricRejected) {
    ConfocalFamily f({2, 1});
    EXPECT_THROW(virtual_configuration(f, 0.5, 0, vec({1, 1}), vec({-1, 0}), vec({0, 1}), vec({0, -1})), Error);
}

TEST(BilliardMap, AxisBounce) {
    ConfocalFamily f({2, 1});
    auto s = billiard_map_step(f, XYZState{vec({std::sqrt(2.0), 0}), vec({1, 0})});
    EXPECT_NEAR(s.next.x(0), -std::sqrt(2.0), 1e-14);
    EXPECT_NEAR(s.next.x(1), 0, 1e-14);
    EXPECT_NEAR(s.next.y(0), -1, 1e-14);
}

TEST(BilliardMap, AgreesWithGeometricSimulator) {
    std::mt19937_64 rng(31);
    ConfocalFamily f({5, 3, 1.5});
    const Ray r = make_ray(random_inside(rng, f), random_unit(rng, 3));
    auto t = simulate_domain(ellipsoid_domain(f), r, 101);
    const std::size_t d = 3;
    for (std::size_t k = 1; k + 1 < t.bounces.size(); ++k) {
        XYZState s{t.bounces[k].point, t.bounces[k - 1].direction};
        auto m = billiard_map_step(f, s);
        EXPECT_LT((m.next.x - t.bounces[k + 1].point).norm(), 1e-10);
        EXPECT_LT((m.next.y - t.bounces[k].direction).norm(), 1e-10);
        // recompute the multipliers from the difference equations
        Vec Ax(d), Ay(d);
        for (std::size_t i = 0; i < d; ++i) {
            Ax(i) = s.x(i) / f.a(i);
            Ay(i) = m.next.y(i) / f.a(i);
        }
        EXPECT_NEAR(m.nu, -2 * Ax.dot(s.y) / Ax.dot(Ax), 1e-12);
        EXPECT_NEAR(m.mu, -2 * Ay.dot(s.x) / Ay.dot(m.next.y), 1e-12);
        EXPECT_LT((m.next.x - s.x - m.mu * m.next.y).norm(), 1e-12);
        EXPECT_LT((m.next.y - s.y - m.nu * Ax).norm(), 1e-12);
    }
}

TEST(XYZ, SumIsSquaredNorm) {
    std::mt19937_64 rng(41);
    ConfocalFamily f({7, 5, 3, 1});
    for (int k = 0; k < 20; ++k) {
        const Vec x = random_unit(rng, 4), y = random_unit(rng, 4);
        auto F = xyz_invariants(f, x, y);
        EXPECT_NEAR(F[0] + F[1] + F[2] + F[3], 1.0, 1e-12);
        const Vec z = 1.7 * x;
        auto G = xyz_invariants(f, z, y);
        EXPECT_NEAR(G[0] + G[1] + G[2] + G[3], z.squaredNorm(), 1e-12);
    }
    EXPECT_THROW(xyz_invariants(std::vector<double>{2, 2, 1}, vec({1, 0, 0}), vec({0, 1, 0})), Error);
}

TEST(XYZ, InvariantsConservedAndGiveCaustics) {
    std::mt19937_64 rng(43);
    ConfocalFamily f({5, 3, 1.5});
    Vec sqrtA(3);
    for (int i = 0; i < 3; ++i) sqrtA(i) = std::sqrt(f.a(i));
    for (int trial = 0; trial < 5; ++trial) {
        Vec x0 = random_unit(rng, 3).cwiseProduct(sqrtA);
        Vec y = random_unit(rng, 3);
        if (y.dot(f.grad(0, x0)) < 0) y = -y;  // arriving from inside
        XYZState s{x0, y};
        std::vector<double> F0;
        for (int k = 0; k < 100; ++k) {
            auto m = billiard_map_step(f, s);
            const Vec q = s.x.cwiseQuotient(sqrtA);
            auto F = xyz_invariants(f, q, m.next.y);
            if (k == 0) {
                F0 = F;
                auto mu = invariant_caustics(f.axes(), F);
                auto cs = caustics_of_line(f, Ray{s.x, m.next.y});
                ASSERT_EQ(mu.size(), 2u);
                EXPECT_NEAR(mu[0], cs.alphas[0], 1e-8);
                EXPECT_NEAR(mu[1], cs.alphas[1], 1e-8);
            }
            for (int i = 0; i < 3; ++i) EXPECT_NEAR(F[i], F0[i], 1e-9);
            s = m.next;
        }
    }
}
