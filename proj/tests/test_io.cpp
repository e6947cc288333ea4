#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <regex>
#include <sstream>

#include "confocal/report.hpp"
#include "confocal/scenario.hpp"

using namespace confocal;

namespace {

Scenario random_scenario(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0, 1);
    std::uniform_int_distribution<int> I(1, 500);
    Scenario s;
    s.name = "sweep " + std::to_string(I(rng));
    s.seed = rng();
    s.family = {2 + U(rng), 1 + U(rng) * 0.5, 0.1 + U(rng) * 0.3};
    if (U(rng) < 0.5) s.tolerance = ToleranceProfile{U(rng) * 1e-8, 1e-12, U(rng) * 1e-9, 1e-10};
    s.domain = DomainConfig{"annulus", U(rng) * 0.05, 0.1 + U(rng) * 0.5};
    s.game = GameConfig{{0.0, 0.3, U(rng)}, {1, -1, 1}};
    for (int k = 0; k < 2; ++k) s.rays.push_back({{U(rng), U(rng), U(rng)}, {1 / 3.0, U(rng), -U(rng)}});
    s.random_rays = RandomRays{I(rng), {U(rng), 1 + U(rng)}};
    s.analysis.bounces = I(rng);
    s.analysis.kind = "planar";
    s.analysis.alpha = U(rng);
    s.analysis.alphas = std::vector<double>{U(rng), U(rng) * 1e-300, -U(rng) * 1e300};
    s.analysis.plane = std::vector<int>{0, 2};
    s.analysis.assert_satisfied = true;
    s.outputs.svg = "out/orbit.svg";
    s.acceptance["c1"]["rays"] = I(rng);
    s.acceptance["c1"]["tol"] = U(rng) * 1e-9;
    return s;
}

ErrorCode code_of(const std::string& text, std::string* message = nullptr) {
    try {
        parse_scenario(text, "test.yaml");
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.code();
    }
    return ErrorCode::InvalidFamily;
}

}  // namespace

TEST(Scenario, RoundTripIsLossless) {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 50; ++k) {
        const Scenario s = random_scenario(rng);
        const std::string text = dump_scenario(s);
        const Scenario back = parse_scenario(text);
        EXPECT_TRUE(back == s) << text;
        EXPECT_EQ(dump_scenario(back), text);
    }
    EXPECT_TRUE(parse_scenario(dump_scenario(Scenario{})) == Scenario{});
}

TEST(Scenario, DiagnosticsCarryLineAndField) {
    std::string msg;
    EXPECT_EQ(code_of("family: [2, 1]\nanalysis:\n  bounces: many\n", &msg), ErrorCode::ConfigError);
    EXPECT_NE(msg.find("test.yaml:3:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("analysis.bounces"), std::string::npos) << msg;

    EXPECT_EQ(code_of("family: [2, 1]\ncolour: red\n", &msg), ErrorCode::ConfigError);
    EXPECT_NE(msg.find("test.yaml:2:"), std::string::npos) << msg;
    EXPECT_NE(msg.find("unknown field"), std::string::npos) << msg;

    EXPECT_EQ(code_of("family: [1, 2]\n", &msg), ErrorCode::ConfigError);
    EXPECT_NE(msg.find("family"), std::string::npos);

    EXPECT_EQ(code_of("family: [2, 1\n", &msg), ErrorCode::ConfigError);
    EXPECT_NE(msg.find("syntax"), std::string::npos);

    EXPECT_EQ(code_of("schema_version: 9\n"), ErrorCode::ConfigError);
    EXPECT_EQ(code_of("domain: {kind: annulus, beta: 0}\n"), ErrorCode::ConfigError);
    EXPECT_EQ(code_of("game: {betas: [0, 0.5], signature: [1]}\n"), ErrorCode::ConfigError);
    EXPECT_EQ(code_of("family: [2, 1]\nrays: [{point: [0, 0, 0], direction: [1, 0]}]\n"), ErrorCode::ConfigError);
    EXPECT_EQ(code_of("analysis: {plane: [0]}\n"), ErrorCode::ConfigError);
}

TEST(Scenario, ToleranceFromEnvironment) {
    Scenario s;
    ::setenv("CONFOCAL_TOLERANCE", "on_quadric=1e-7,pencil=2e-9", 1);
    const ToleranceProfile t = effective_tolerance(s);
    EXPECT_EQ(t.on_quadric, 1e-7);
    EXPECT_EQ(t.pencil, 2e-9);
    EXPECT_EQ(t.unit, ToleranceProfile{}.unit);
    s.tolerance = ToleranceProfile{};
    EXPECT_TRUE(effective_tolerance(s) == ToleranceProfile{});
    ::setenv("CONFOCAL_TOLERANCE", "speed=1", 1);
    EXPECT_THROW(effective_tolerance(Scenario{}), Error);
    ::unsetenv("CONFOCAL_TOLERANCE");
    EXPECT_TRUE(effective_tolerance(Scenario{}) == ToleranceProfile{});
}

TEST(Report, ExactConditionReportSerializesFractions) {
    Rational a1(8), a2(3), alpha(72, 25);
    auto rep = cayley_planar(pencil_discriminant(a1, a2, alpha), 3);
    const json j = document("cayley", {{"report", to_json(rep)}});
    EXPECT_EQ(j.begin().key(), "schema_version");
    EXPECT_EQ(j["report"]["determinant"], "0");
    EXPECT_EQ(j["report"]["satisfied"], true);
    auto off = cayley_planar(pencil_discriminant(a1, a2, Rational(1, 2)), 3);
    const std::string det = to_json(off)["determinant"];
    EXPECT_TRUE(std::regex_match(det, std::regex("-?[0-9]+/[0-9]+"))) << det;
}

TEST(Report, TrajectoryCsvAndSvg) {
    ConfocalFamily f({2, 1});
    Vec p(2), v(2);
    p << std::sqrt(1.05), 0.68;
    v << 0, -1;
    auto t = simulate_domain(annulus_domain(f, 0, 0.9), make_ray(p, v), 8);
    std::ostringstream csv;
    write_trajectory_csv(csv, {t});
    std::string line;
    std::istringstream in(csv.str());
    std::getline(in, line);
    EXPECT_EQ(line, "trajectory,bounce,wall,lambda,side,x1,x2,v1,v2");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    EXPECT_EQ(rows, static_cast<int>(t.bounces.size()));

    SvgScene scene;
    scene.axes = f.axes();
    scene.walls = {0, 0.9};
    scene.paths.emplace_back();
    scene.wall_of_vertex.emplace_back();
    for (const auto& b : t.bounces) {
        scene.paths[0].push_back(b.point);
        scene.wall_of_vertex[0].push_back(b.wall);
    }
    const std::string svg = render_svg(scene);
    auto count = [&](const std::string& needle) {
        std::size_t n = 0;
        for (auto pos = svg.find(needle); pos != std::string::npos; pos = svg.find(needle, pos + 1)) ++n;
        return n;
    };
    EXPECT_EQ(count("<ellipse class=\"wall\""), 2u);
    EXPECT_EQ(count("class=\"bounce wall-0\"") + count("class=\"bounce wall-1\""), t.bounces.size());
    EXPECT_EQ(render_svg(scene), svg);
}

TEST(Report, JsonIsByteStable) {
    std::mt19937_64 rng(5);
    ConfocalFamily f({5, 3, 1.5});
    auto ray = ray_with_caustics(f, {0.7, 2.0}, rng);
    ASSERT_TRUE(ray);
    const std::string a = dump(document("simulate", {{"trajectory", to_json(simulate_domain(ellipsoid_domain(f), *ray, 30))}}));
    const std::string b = dump(document("simulate", {{"trajectory", to_json(simulate_domain(ellipsoid_domain(f), *ray, 30))}}));
    EXPECT_EQ(a, b);
    EXPECT_EQ(json::parse(a)["schema_version"], 1);
}
