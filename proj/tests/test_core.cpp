#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "confocal/core.hpp"

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

}  // namespace

TEST(Classify, IntervalRule) {
    ConfocalFamily f({2, 1});
    EXPECT_EQ(classify(f, 0.5).kind, QuadricKind::Ellipsoid);
    auto h = classify(f, 1.5);
    EXPECT_EQ(h.kind, QuadricKind::Hyperboloid);
    EXPECT_EQ(h.index, 1);
    EXPECT_EQ(classify(f, 1.0).kind, QuadricKind::Degenerate);
    EXPECT_EQ(classify(f, -3.0).kind, QuadricKind::Ellipsoid);
}

TEST(Family, RejectsBadAxes) {
    EXPECT_THROW(ConfocalFamily({1, 2}), Error);
    EXPECT_THROW(ConfocalFamily({1}), Error);
    EXPECT_THROW(ConfocalFamily({2, 0}), Error);
}

TEST(EllipticCoordinates, OnAxisDegenerates) {
    ConfocalFamily f({2, 1});
    auto ec = elliptic_coordinates(f, vec({std::sqrt(2.0), 0.0}));
    EXPECT_NEAR(ec.lambda[0], 1.0, 1e-15);
    EXPECT_NEAR(ec.lambda[1], 0.0, 1e-14);
    EXPECT_TRUE(ec.degenerate[0]);
    EXPECT_FALSE(ec.degenerate[1]);
}

TEST(EllipticCoordinates, QuadraticExample) {
    ConfocalFamily f({2, 1});
    const Vec x = vec({1.0, 0.5});
    // lambda^2 - 1.75 lambda + 0.5 = 0
    const double disc = std::sqrt(1.75 * 1.75 - 2.0);
    auto ec = elliptic_coordinates(f, x);
    EXPECT_NEAR(ec.lambda[0], (1.75 + disc) / 2, 1e-13);
    EXPECT_NEAR(ec.lambda[1], (1.75 - disc) / 2, 1e-13);
    EXPECT_NEAR(ec.lambda[0], 1.390388, 1e-6);
    EXPECT_NEAR(ec.lambda[1], 0.359612, 1e-6);
    for (double l : ec.lambda) EXPECT_NEAR(f.Q(l, x), 1.0, 1e-12);
}

TEST(EllipticCoordinates, RoundTripAndInterlacing) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.05, 2.0);
    for (auto axes : {std::vector<double>{2, 1}, std::vector<double>{4, 2, 1},
                      std::vector<double>{9, 5, 3, 1}}) {
        ConfocalFamily f(axes);
        const int d = static_cast<int>(axes.size());
        for (int trial = 0; trial < 200; ++trial) {
            Vec x(d);
            for (int i = 0; i < d; ++i) x(i) = u(rng);
            auto ec = elliptic_coordinates(f, x);
            ASSERT_EQ(static_cast<int>(ec.lambda.size()), d);
            for (int s = 0; s < d; ++s) {
                EXPECT_NEAR(f.Q(ec.lambda[s], x), 1.0, 1e-10);
                EXPECT_LT(ec.lambda[s], axes[s]);
                if (s + 1 < d) EXPECT_GT(ec.lambda[s], axes[s + 1]);
            }
            const Vec back = cartesian_from_elliptic(f, ec.lambda, std::vector<int>(d, 1));
            EXPECT_LT((back - x).norm(), 1e-9);
        }
    }
}

TEST(EllipticCoordinates, ProductIdentity) {
    // 1 - Q_l(x) = prod_j (lambda_j - l) / prod_i (a_i - l)
    ConfocalFamily f({5, 3, 2});
    const Vec x = vec({0.7, -1.1, 0.4});
    auto ec = elliptic_coordinates(f, x);
    for (double l : {-1.0, 0.5, 2.5, 4.0, 7.0}) {
        double num = 1, den = 1;
        for (int j = 0; j < 3; ++j) {
            num *= ec.lambda[j] - l;
            den *= f.a(j) - l;
        }
        EXPECT_NEAR(1.0 - f.Q(l, x), num / den, 1e-10);
    }
}

TEST(EllipticCoordinates, RejectsNonfinite) {
    ConfocalFamily f({2, 1});
    EXPECT_THROW(elliptic_coordinates(f, vec({NAN, 0.1})), Error);
}

TEST(PencilPolynomial, Examples) {
    auto p = pencil_polynomial({mpq_class(2), mpq_class(1)}, {mpq_class(1, 2)});
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p[0], mpq_class(1));
    EXPECT_EQ(p[1], mpq_class(-7, 2));
    EXPECT_EQ(p[2], mpq_class(7, 2));
    EXPECT_EQ(p[3], mpq_class(-1));
    auto q = pencil_polynomial({mpq_class(4), mpq_class(2), mpq_class(1)},
                               {mpq_class(3, 2), mpq_class(3)});
    ASSERT_EQ(q.size(), 6u);
    EXPECT_EQ(q[0], mpq_class(36));
    EXPECT_EQ(q[5], mpq_class(-1));
}

TEST(Intersect, AxisTangentAndMiss) {
    ConfocalFamily f({2, 1});
    auto hit = intersect(f, 0.0, make_ray(vec({0, 0}), vec({1, 0})));
    ASSERT_EQ(hit.t.size(), 2u);
    EXPECT_NEAR(hit.t[0], -std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(hit.t[1], std::sqrt(2.0), 1e-15);

    auto tan = intersect(f, 0.0, make_ray(vec({0, 1}), vec({1, 0})));
    EXPECT_TRUE(tan.tangent);
    ASSERT_EQ(tan.t.size(), 1u);
    EXPECT_NEAR(tan.discriminant, 0.0, 1e-10);

    auto miss = intersect(f, 0.0, make_ray(vec({0, 2}), vec({1, 0})));
    EXPECT_TRUE(miss.t.empty());
    EXPECT_LT(miss.discriminant, 0.0);
    EXPECT_THROW(intersect(f, 1.0, make_ray(vec({0, 0}), vec({1, 0}))), Error);
}

TEST(Caustics, AxisLineIsFocalSegment) {
    ConfocalFamily f({2, 1});
    auto cs = caustics_of_line(f, make_ray(vec({0, 0}), vec({1, 0})));
    ASSERT_EQ(cs.alphas.size(), 1u);
    EXPECT_NEAR(cs.alphas[0], 1.0, 1e-15);
    EXPECT_TRUE(cs.degenerate[0]);
}

TEST(Caustics, TangentLineToConfocalEllipse) {
    ConfocalFamily f({2, 1});
    const double al = 0.5;
    for (double th : {0.1, 0.9, 2.3, 4.0}) {
        const Vec p = vec({std::sqrt(2 - al) * std::cos(th), std::sqrt(1 - al) * std::sin(th)});
        const Vec t = vec({-std::sqrt(2 - al) * std::sin(th), std::sqrt(1 - al) * std::cos(th)});
        auto cs = caustics_of_line(f, make_ray(p, t));
        EXPECT_NEAR(cs.alphas[0], al, 1e-10);
    }
}

TEST(Caustics, ClosedFormDiscriminant) {
    // Phi_lambda = prod (alpha - lambda) / prod (a - lambda) for a unit direction
    std::mt19937_64 rng(3);
    ConfocalFamily f({4, 2, 1});
    for (int trial = 0; trial < 50; ++trial) {
        Ray r = make_ray(random_unit(rng, 3) * 0.8, random_unit(rng, 3));
        auto cs = caustics_of_line(f, r);
        ASSERT_EQ(cs.alphas.size(), 2u);
        for (double l : {-2.0, 0.3, 1.5, 3.0, 6.0}) {
            double num = 1, den = 1;
            for (double al : cs.alphas) num *= al - l;
            for (double ai : f.axes()) den *= ai - l;
            EXPECT_NEAR(line_discriminant(f, l, r), num / den, 1e-9 * (1 + std::abs(num / den)));
        }
    }
}

TEST(Caustics, BasePointIndependence) {
    std::mt19937_64 rng(11);
    ConfocalFamily f({4, 2, 1});
    for (int trial = 0; trial < 50; ++trial) {
        Ray r = make_ray(random_unit(rng, 3) * 0.8, random_unit(rng, 3));
        Ray r2 = make_ray(r.point + 1.7 * r.direction, r.direction);
        auto c1 = caustics_of_line(f, r), c2 = caustics_of_line(f, r2);
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(c1.alphas[k], c2.alphas[k], 1e-10);
    }
}

TEST(Caustics, PencilNonnegativityAlongLine) {
    std::mt19937_64 rng(5);
    ConfocalFamily f({4, 2, 1});
    for (int trial = 0; trial < 30; ++trial) {
        Ray r = make_ray(random_unit(rng, 3) * 0.5, random_unit(rng, 3));
        auto cs = caustics_of_line(f, r);
        const auto P = pencil_polynomial(f, cs.alphas);
        for (double t = -3; t <= 3; t += 0.25) {
            auto ec = elliptic_coordinates(f, r.point + t * r.direction);
            for (double l : ec.lambda) EXPECT_GE(poly_eval(P, l), -1e-9 * 64);
        }
    }
}

TEST(Reflect, NormalGrazingAndInvolution) {
    ConfocalFamily f({2, 1});
    const Vec p = vec({std::sqrt(2.0), 0});
    const Vec back = reflect(f, 0.0, p, vec({1, 0}));
    EXPECT_NEAR(back(0), -1.0, 1e-15);
    const Vec graze = reflect(f, 0.0, p, vec({0, 1}));
    EXPECT_NEAR(graze(1), 1.0, 1e-15);

    std::mt19937_64 rng(2);
    ConfocalFamily g({4, 2, 1});
    for (int trial = 0; trial < 100; ++trial) {
        Vec x = random_unit(rng, 3);
        x = x / std::sqrt(g.Q(0.0, x));
        const Vec v = random_unit(rng, 3);
        const Vec r = reflect(g, 0.0, x, v);
        EXPECT_LT((reflect(g, 0.0, x, r) - v).norm(), 1e-12);
        const Vec w = reflect(g, 0.0, x, v, ReflectionMode::Virtual);
        EXPECT_LT((w + r).norm(), 1e-12);
        EXPECT_LT((reflect(g, 0.0, x, w, ReflectionMode::Virtual) - v).norm(), 1e-12);
        EXPECT_NEAR(r.norm(), 1.0, 1e-12);
        auto c1 = caustics_of_line(g, make_ray(x, v)), c2 = caustics_of_line(g, make_ray(x, r));
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(c1.alphas[k], c2.alphas[k], 1e-10);
    }
    EXPECT_THROW(reflect(g, 0.0, vec({0.1, 0.1, 0.1}), vec({1, 0, 0})), Error);
}

TEST(TangentHyperplane, AxisPointAndTangency) {
    ConfocalFamily f({2, 1});
    auto h = tangent_hyperplane(f, 0.0, vec({std::sqrt(2.0), 0}));
    EXPECT_NEAR(h.coefficients(0), 1.0, 1e-15);
    EXPECT_NEAR(h.coefficients(1), 0.0, 1e-15);
    EXPECT_NEAR(h.coefficients(2), std::sqrt(2.0), 1e-15);

    std::mt19937_64 rng(9);
    ConfocalFamily g({4, 2, 1});
    for (double lam : {0.0, 1.5, 3.0}) {
        for (int trial = 0; trial < 20; ++trial) {
            Vec x = random_unit(rng, 3);
            const double q = g.Q(lam, x);
            if (q <= 0) continue;
            x /= std::sqrt(q);
            auto hp = tangent_hyperplane(g, lam, x);
            EXPECT_NEAR(hp.normal().dot(x), hp.offset(), 1e-12 * (1 + std::abs(hp.offset())));
            Vec n = hp.normal();
            Vec t = random_unit(rng, 3);
            t -= t.dot(n) / n.squaredNorm() * n;
            auto in = intersect(g, lam, make_ray(x, t));
            EXPECT_NEAR(in.discriminant, 0.0, 1e-10);
        }
    }
}

TEST(InPencil, TwoThreeAndGeneric) {
    std::vector<Hyperplane> two{normalize_hyperplane(vec({1, 2, 3, 4})),
                                normalize_hyperplane(vec({0, 1, -1, 2}))};
    EXPECT_TRUE(in_pencil(two));
    // three planes through the line x = 0, y = 0 in R^3
    std::vector<Hyperplane> three{normalize_hyperplane(vec({1, 0, 0, 0})),
                                  normalize_hyperplane(vec({0, 1, 0, 0})),
                                  normalize_hyperplane(vec({1, 1, 0, 0}))};
    EXPECT_TRUE(in_pencil(three));
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> u(-9, 9);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::vector<mpq_class>> rows(3, std::vector<mpq_class>(4));
        std::vector<Hyperplane> planes;
        for (auto& row : rows) {
            Vec c(4);
            for (int k = 0; k < 4; ++k) {
                row[k] = u(rng);
                c(k) = row[k].get_d();
            }
            if (c.norm() == 0) {
                row[0] = 1;
                c(0) = 1;
            }
            planes.push_back(normalize_hyperplane(c));
        }
        EXPECT_EQ(in_pencil(planes), in_pencil_exact(rows));
    }
}

TEST(RationalAlgebra, RankAndDeterminant) {
    std::vector<std::vector<mpq_class>> m{{1, 2, 3}, {2, 4, 6}, {1, 0, 1}};
    EXPECT_EQ(rational_rank(m), 2);
    EXPECT_EQ(rational_determinant(m), 0);
    std::vector<std::vector<mpq_class>> n{{2, 1}, {1, 3}};
    EXPECT_EQ(rational_determinant(n), 5);
}
