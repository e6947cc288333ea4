#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "confocal/jacobian.hpp"

using namespace confocal;

namespace {

double cayley_root(double a1, double a2, int n) { return find_planar_caustic(a1, a2, n); }

}  // namespace

TEST(AbelIntegral, ArcsineIsPi) {
    auto m = make_model({1, 0, -1});
    EXPECT_EQ(m.genus, 0);
    EXPECT_NEAR(abel_integral(m, 0, -1, 1), M_PI, 1e-12);
}

TEST(AbelIntegral, MatchesMidpointOracle) {
    auto m = make_model(poly_scale(poly_from_factors(std::vector<double>{0, 1, 2}), -1.0));
    // x = t^2 on [0, 1/2], x = 1 - t^2 on [1/2, 1]; both integrands are smooth
    const int N = 1000000;
    double s = 0;
    const double T = std::sqrt(0.5);
    for (int k = 0; k < N; ++k) {
        const double t = (k + 0.5) * T / N;
        const double x1 = t * t;
        s += 2 / std::sqrt((1 - x1) * (2 - x1)) * T / N;
        const double x2 = 1 - t * t;
        s += 2 / std::sqrt(x2 * (2 - x2)) * T / N;
    }
    EXPECT_NEAR(abel_integral(m, 0, 0, 1), s, 1e-9);
}

TEST(AbelIntegral, OrientationAndSign) {
    auto m = make_model(poly_from_factors(std::vector<double>{3, 2, 0.5}));
    const double a = abel_integral(m, 1, 2, 3);
    EXPECT_DOUBLE_EQ(abel_integral(m, 1, 3, 2), -a);
    EXPECT_DOUBLE_EQ(abel_integral(m, 1, 2, 3, -1), -a);
    EXPECT_GT(a, 0);
    // interior point, endpoint not a branch point
    const double b = abel_integral(m, 0, 0, 0.25) + abel_integral(m, 0, 0.25, 0.5);
    EXPECT_NEAR(b, abel_integral(m, 0, 0, 0.5), 1e-12);
}

TEST(AbelIntegral, Errors) {
    auto m = make_model(poly_from_factors(std::vector<double>{3, 2, 0.5}));
    EXPECT_THROW(abel_integral(m, 0, 0, 2.5), Error);
    EXPECT_THROW(abel_integral(m, 0, 1, 1.5), Error);
    try {
        abel_integral(m, 0, 0, 2.5);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BranchPointInterior);
    }
    try {
        abel_integral(m, 0, 1, 1.5);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NegativePolynomial);
    }
}

TEST(Model, GenusAndRegularity) {
    ConfocalFamily f({3, 2, 1});
    auto m = billiard_model(f, {0.5, 1.5});
    EXPECT_EQ(m.genus, 2);
    EXPECT_TRUE(m.regular);
    EXPECT_EQ(m.branch_points.size(), 5u);
    auto s = surface_model(f, {1.5});
    EXPECT_EQ(s.genus, 2);
    EXPECT_NEAR(s.branch_points.front(), 0, 1e-12);
    EXPECT_FALSE(make_model(poly_from_factors(std::vector<double>{1, 1, 2})).regular);
}

TEST(PeriodLattice, GenusOneHasOneRealCycle) {
    ConfocalFamily f({2, 1});
    auto m = billiard_model(f, {0.5});
    auto L = real_period_lattice(m);
    ASSERT_EQ(L.periods.cols(), 1);
    EXPECT_NEAR(L.periods(0, 0), 2 * abel_integral(m, 0, 1, 2), 1e-14);
    EXPECT_DOUBLE_EQ(L.condition, 1.0);
}

TEST(RotationNumber, LimitAndMonotone) {
    ConfocalFamily f({2, 1});
    // logarithmic approach to 1/2 as the caustic tends to the minor semi-axis
    double last = 0;
    for (int k = 1; k <= 10; ++k) {
        const double r = rotation_number(f, 1 - std::pow(10.0, -k));
        EXPECT_GT(r, last);
        EXPECT_LT(r, 0.5);
        last = r;
    }
    EXPECT_GT(last, 0.45);
    EXPECT_LT(rotation_number(f, 1e-4), 0.02);
    double prev = 0;
    for (int k = 1; k <= 50; ++k) {
        const double r = rotation_number(f, k / 51.0);
        EXPECT_GT(r, prev);
        EXPECT_LT(r, 0.5);
        prev = r;
    }
    EXPECT_THROW(rotation_number(f, 1.5), Error);
}

TEST(RotationNumber, CayleyRootsHaveUnitFractions) {
    ConfocalFamily f({2, 1});
    for (int n = 3; n <= 8; ++n) EXPECT_NEAR(rotation_number(f, cayley_root(2, 1, n)), 1.0 / n, 1e-9) << n;
}

TEST(Lattice, MembershipSearch) {
    Eigen::MatrixXd G(2, 2);
    G << 3, 1, 0.5, 2;
    Eigen::VectorXd v = 4 * G.col(0) - 7 * G.col(1);
    auto r = lattice_membership(v, G, 64, 1e-9);
    EXPECT_EQ(r.verdict, Verdict::Satisfied);
    EXPECT_EQ(r.combination, (std::vector<long>{4, -7}));
    auto far = lattice_membership(v, G, 5, 1e-9);
    EXPECT_EQ(far.verdict, Verdict::NotSatisfied);
    Eigen::VectorXd off = v + Eigen::Vector2d(0.3, 0.1);
    EXPECT_EQ(lattice_membership(off, G, 64, 1e-9).verdict, Verdict::NotSatisfied);
    // dependent generator enumerated
    Eigen::MatrixXd H(1, 2);
    H << 1.0, std::sqrt(2.0);
    Eigen::VectorXd w(1);
    w << 3 - 2 * std::sqrt(2.0);
    auto d = lattice_membership(w, H, 10, 1e-12);
    EXPECT_EQ(d.verdict, Verdict::Satisfied);
    EXPECT_EQ(d.combination, (std::vector<long>{3, -2}));
}

TEST(Closure, TrivialWeights) {
    auto m = billiard_model(ConfocalFamily({2, 1}), {0.5});
    EXPECT_EQ(closure_condition(m, {}).verdict, Verdict::Satisfied);
    EXPECT_EQ(closure_condition(m, {{0, 0, 0.5, 1}}).verdict, Verdict::Satisfied);
}

TEST(Closure, PlanarAgreesWithRotationNumber) {
    ConfocalFamily f({2, 1});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.02, 0.98);
    int agree = 0;
    for (int k = 0; k < 20; ++k) {
        const int n = 3 + k % 8;
        const double alpha = k % 2 == 0 ? cayley_root(2, 1, n) : u(rng);
        const double rho = rotation_number(f, alpha);
        const bool rational = std::abs(n * rho - std::round(n * rho)) < 1e-9;
        auto v = closure_condition(billiard_model(f, {alpha}), {{n, 0, alpha, 1}});
        const bool sat = v.verdict == Verdict::Satisfied;
        agree += sat == rational;
        EXPECT_EQ(sat, rational) << "alpha=" << alpha << " n=" << n;
        if (k % 2 == 0) EXPECT_TRUE(rational);
    }
    EXPECT_EQ(agree, 20);
}

TEST(Closure, VerdictsStableUnderTighterTolerance) {
    ConfocalFamily f({2, 1});
    for (int n = 3; n <= 8; ++n)
        for (double alpha : {cayley_root(2, 1, n), 0.3, 0.7}) {
            auto m = billiard_model(f, {alpha});
            EXPECT_EQ(closure_condition(m, {{n, 0, alpha, 1}}, 64, 1e-6).verdict,
                      closure_condition(m, {{n, 0, alpha, 1}}, 64, 5e-7).verdict);
        }
}

TEST(Closure, GenusThreeUnsupported) {
    auto m = billiard_model(ConfocalFamily({4, 3, 2, 1}), {0.5, 1.5, 2.5});
    EXPECT_THROW(closure_condition(m, {{1, 0, 0.5, 1}}), Error);
}

TEST(Game, InsideEllipsoidMatchesPeriodCondition) {
    // k copies of the boundary with signature +1 against the exact Hankel test up to central symmetry
    for (auto [a1, a2, an, ad, n] : std::vector<std::tuple<long, long, long, long, int>>{
             {4, 1, 4, 9, 3}, {2, 1, 2, 3, 2}, {8, 3, 72, 25, 3}, {5, 3, 1, 2, 3}, {5, 3, 1, 3, 4}}) {
        Rational alpha(an, ad);
        ConfocalFamily f({double(a1), double(a2)});
        auto m = billiard_model(f, {alpha.get_d()});
        auto g = game_condition(m, std::vector<double>(n, 0.0), std::vector<int>(n, 1));
        auto p = period_condition_ddim(pencil_discriminant(Rational(a1), Rational(a2), alpha), n, 2);
        EXPECT_EQ(g.verdict == Verdict::Satisfied, p.satisfied) << a1 << "," << a2 << " n=" << n;
    }
}

TEST(Game, SignFlipNegatesContribution) {
    auto m = billiard_model(ConfocalFamily({3, 2, 1}), {0.5, 1.5});
    auto a = game_condition(m, {0.1, 0.3}, {1, 1});
    auto b = game_condition(m, {0.1, 0.3}, {1, -1});
    auto c = game_condition(m, {0.1}, {1});
    auto d = game_condition(m, {0.3}, {1});
    EXPECT_NEAR((a.vector - b.vector - 2 * d.vector).norm(), 0, 1e-12);
    EXPECT_NEAR((a.vector - c.vector - d.vector).norm(), 0, 1e-12);
}

TEST(SurfaceGame, DivisorTable) {
    auto eq = [](SurfaceDivisor d, int u, int l) { return d.upper == u && d.lower == l; };
    EXPECT_TRUE(eq(surface_game_divisor(1, 1, 1.2, 1.5), 1, 0));
    EXPECT_TRUE(eq(surface_game_divisor(1, -1, 1.2, 1.5), 0, 0));
    EXPECT_TRUE(eq(surface_game_divisor(-1, 1, 1.5, 1.2), 0, 0));
    EXPECT_TRUE(eq(surface_game_divisor(1, -1, 1.5, 1.2), 1, -1));
    EXPECT_TRUE(eq(surface_game_divisor(-1, 1, 1.2, 1.5), -1, 1));
    EXPECT_TRUE(eq(surface_game_divisor(-1, -1, 1.2, 1.5), 0, 1));
    EXPECT_THROW(surface_game_divisor(1, -1, 1.2, 1.2), Error);
}

TEST(SurfaceGame, BracketAndProjection) {
    ConfocalFamily f({7, 3, 1});
    auto r = surface_game_condition(f, 2.5, {1.5, 1.5, 1.5}, {1, 1, 1});
    EXPECT_DOUBLE_EQ(r.mu_lower, 1.0);
    EXPECT_DOUBLE_EQ(r.mu_upper, 2.5);
    ASSERT_EQ(r.divisors.size(), 3u);
    for (auto d : r.divisors) EXPECT_EQ(d.upper, 1);
    // all +1: v = k (abar(beta) - abar(alpha)) = -k * integral of x dx / y over [beta, alpha]
    auto m = surface_model(f, {2.5});
    EXPECT_NEAR(r.verdict.vector(0), -3 * abel_integral(m, 1, 1.5, 2.5), 1e-11);
    EXPECT_THROW(surface_game_condition(f, 2.5, {1.5, 4.0}, {1, 1}), Error);
}
