#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <sstream>

#include "confocal/billiard.hpp"
#include "confocal/cayley.hpp"
#include "confocal/geodesic.hpp"
#include "confocal/jacobian.hpp"
#include "confocal/perturb.hpp"
#include "confocal/report.hpp"
#include "confocal/scenario.hpp"

using namespace confocal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotSatisfied = 2;
constexpr int kExitInconclusive = 3;

struct Flags {
    std::string scenario;
    bool json = false;
    std::optional<std::string> out, csv, svg;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<double>> axes, point, direction, caustics, betas, alphas, gammas, abc;
    std::optional<std::vector<int>> signature, plane;
    std::optional<double> beta, inner, lambda, closure_tol, offset;
    std::optional<int> bounces, rounds, n, m, starts, count, samples;
    std::optional<std::string> kind, table, alpha, gamma, beta1, beta2;
    bool alpha_star = false;
    bool float_mode = false;
    double ratio_tol = 1e-20;
    bool assert_mode = false;
    bool dump_scenario = false;
    int workers = 0;
};

// Decimal text is read as the exact decimal fraction, "p/q" exactly.
Rational parse_rational(const std::string& text) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        Rational q(text.substr(0, slash) + "/" + text.substr(slash + 1));
        if (q.get_den() == 0) throw Error(ErrorCode::ConfigError, "zero denominator in " + text);
        q.canonicalize();
        return q;
    }
    std::string mant = text;
    long exp10 = 0;
    const auto e = mant.find_first_of("eE");
    if (e != std::string::npos) {
        exp10 = std::stol(mant.substr(e + 1));
        mant = mant.substr(0, e);
    }
    const auto dot = mant.find('.');
    if (dot != std::string::npos) {
        exp10 -= static_cast<long>(mant.size() - dot - 1);
        mant.erase(dot, 1);
    }
    if (mant.empty() || mant == "-" || mant == "+") throw Error(ErrorCode::ConfigError, "not a number: " + text);
    if (mant[0] == '+') mant.erase(0, 1);
    Rational q;
    try {
        q = Rational(mpz_class(mant, 10));
    } catch (const std::invalid_argument&) {
        throw Error(ErrorCode::ConfigError, "not a number: " + text);
    }
    mpz_class p10;
    mpz_ui_pow_ui(p10.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    if (exp10 >= 0) q *= p10;
    else q /= p10;
    q.canonicalize();
    return q;
}

// Shortest round-trip decimal of a double, read exactly.
Rational rational_of(double v) { return parse_rational(json(v).dump()); }

std::string fraction(const Rational& q) {
    Rational c = q;
    c.canonicalize();
    return c.get_den() == 1 ? c.get_num().get_str() : c.get_num().get_str() + "/" + c.get_den().get_str();
}

BigFloat big(const Rational& q) { return BigFloat(q.get_num().get_str()) / BigFloat(q.get_den().get_str()); }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

Scenario effective_scenario(const Flags& f) {
    Scenario s = f.scenario.empty() ? Scenario{} : load_scenario(f.scenario);
    AnalysisConfig& a = s.analysis;
    if (f.seed) s.seed = *f.seed;
    if (f.axes) s.family = *f.axes;
    if (f.beta || f.inner) {
        if (!s.domain) s.domain = DomainConfig{};
        if (f.beta) s.domain->beta = *f.beta;
        if (f.inner) {
            s.domain->kind = "annulus";
            s.domain->inner = *f.inner;
        }
    }
    if (f.betas) {
        if (!s.game) s.game = GameConfig{};
        s.game->betas = *f.betas;
        s.game->signature = f.signature ? *f.signature : std::vector<int>(f.betas->size(), 1);
    } else if (f.signature && s.game) {
        s.game->signature = *f.signature;
    }
    if (f.point || f.direction) {
        if (!f.point) throw Error(ErrorCode::ConfigError, "--direction needs --point");
        s.rays = {RaySpec{*f.point, f.direction.value_or(std::vector<double>{})}};
        s.random_rays.reset();
    }
    if (f.caustics || f.count) {
        if (!s.random_rays) s.random_rays = RandomRays{1, {}};
        if (f.caustics) s.random_rays->caustics = *f.caustics;
        if (f.count) s.random_rays->count = *f.count;
        if (!f.point) s.rays.clear();
    }
    if (f.bounces) a.bounces = *f.bounces;
    if (f.rounds) a.rounds = *f.rounds;
    if (f.n) a.period = *f.n;
    if (f.m) a.m = *f.m;
    if (f.starts) a.starts = *f.starts;
    if (f.samples) a.samples = *f.samples;
    if (f.kind) a.kind = *f.kind;
    if (f.table) a.table = *f.table;
    if (f.alpha) a.alpha = parse_rational(*f.alpha).get_d();
    if (f.gamma) a.gamma = parse_rational(*f.gamma).get_d();
    if (f.beta1) a.beta1 = parse_rational(*f.beta1).get_d();
    if (f.beta2) a.beta2 = parse_rational(*f.beta2).get_d();
    if (f.lambda) a.lambda = *f.lambda;
    if (f.closure_tol) a.closure_tol = *f.closure_tol;
    if (f.alphas) a.alphas = *f.alphas;
    if (f.gammas) a.gammas = *f.gammas;
    if (f.abc) a.abc = *f.abc;
    if (f.plane) a.plane = *f.plane;
    if (f.assert_mode) a.assert_satisfied = true;
    if (f.out) s.outputs.json = *f.out;
    if (f.csv) s.outputs.csv = *f.csv;
    if (f.svg) s.outputs.svg = *f.svg;
    return s;
}

// Exact value of a flag when given, else of the scenario double.
Rational exact_param(const std::optional<std::string>& flag, const std::optional<double>& value, const char* name) {
    if (flag) return parse_rational(*flag);
    if (!value) throw Error(ErrorCode::ConfigError, std::string("missing ") + name);
    return rational_of(*value);
}

ConfocalFamily family_of(const Scenario& s) {
    if (s.family.empty()) throw Error(ErrorCode::ConfigError, "family: missing (use --axes)");
    return ConfocalFamily(s.family, effective_tolerance(s));
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ConfigError, path + ": cannot write");
    out << text;
}

// Prints the JSON document (stdout in --json mode, and the json output path if set).
void emit(const Flags& f, const Scenario& s, const std::string& command, json body, const std::string& text) {
    const std::string doc = dump(document(command, std::move(body)));
    if (s.outputs.json) write_file(*s.outputs.json, doc);
    if (f.json) std::cout << doc;
    else std::cout << text;
}

int verdict_exit(const Scenario& s, Verdict v) {
    if (!s.analysis.assert_satisfied.value_or(false)) return kExitOk;
    switch (v) {
        case Verdict::Satisfied: return kExitOk;
        case Verdict::NotSatisfied: return kExitNotSatisfied;
        default: return kExitInconclusive;
    }
}

DomainSpec domain_of(const Scenario& s, const ConfocalFamily& fam) {
    const DomainConfig d = s.domain.value_or(DomainConfig{});
    if (d.kind == "annulus") return annulus_domain(fam, d.beta, *d.inner);
    return ellipsoid_domain(fam, d.beta);
}

// Moves the start forward to the first stretch of the ray inside the domain.
std::optional<Ray> enter_domain(const DomainSpec& spec, const Ray& r) {
    if (spec.contains(r.point, 1e-12)) return r;
    std::vector<double> ts{0};
    for (const auto& b : spec.bounds)
        for (const auto& v : {b.lower, b.upper})
            if (v)
                for (double t : intersect(spec.family, *v, r).t)
                    if (t > 0) ts.push_back(t);
    std::sort(ts.begin(), ts.end());
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const Vec mid = r.point + 0.5 * (ts[k] + ts[k + 1]) * r.direction;
        if (spec.contains(mid, 0)) return Ray{mid, r.direction};
    }
    return std::nullopt;
}

Vec random_inside(std::mt19937_64& rng, const DomainSpec& spec) {
    std::uniform_real_distribution<double> U(-1, 1);
    const ConfocalFamily& fam = spec.family;
    for (int it = 0; it < 100000; ++it) {
        Vec x(fam.dim());
        for (std::size_t i = 0; i < fam.dim(); ++i) x(i) = U(rng) * std::sqrt(fam.a(i));
        if (spec.contains(x, 0)) return x;
    }
    throw Error(ErrorCode::ConfigError, "domain has no interior points");
}

Vec random_unit(std::mt19937_64& rng, std::size_t d) {
    std::normal_distribution<double> N(0, 1);
    Vec v(d);
    for (std::size_t i = 0; i < d; ++i) v(i) = N(rng);
    return v.normalized();
}

std::vector<Ray> rays_of(const Scenario& s, const ConfocalFamily& fam, const DomainSpec* spec) {
    std::vector<Ray> out;
    for (const auto& r : s.rays) {
        if (r.direction.empty()) throw Error(ErrorCode::ConfigError, "rays: direction missing");
        if (r.point.size() != fam.dim() || r.direction.size() != fam.dim())
            throw Error(ErrorCode::ConfigError, "rays: dimension differs from the family");
        out.push_back(make_ray(to_vec(r.point), to_vec(r.direction)));
    }
    if (s.random_rays) {
        std::mt19937_64 rng(s.seed);
        for (int k = 0; k < s.random_rays->count; ++k) {
            if (s.random_rays->caustics.empty()) {
                if (!spec) throw Error(ErrorCode::ConfigError, "random_rays: caustics needed without a domain");
                out.push_back(make_ray(random_inside(rng, *spec), random_unit(rng, fam.dim())));
                continue;
            }
            auto r = ray_with_caustics(fam, s.random_rays->caustics, rng);
            if (!r) throw Error(ErrorCode::ConfigError, "random_rays: no line with these caustics");
            out.push_back(*r);
        }
    }
    if (out.empty()) throw Error(ErrorCode::ConfigError, "rays: none given (use --point/--direction or --caustics)");
    if (spec)
        for (auto& r : out) {
            auto in = enter_domain(*spec, r);
            if (!in) throw Error(ErrorCode::EscapedDomain, "ray never enters the domain");
            r = *in;
        }
    return out;
}

std::string closure_text(const std::optional<Closure>& c) {
    if (!c) return "none";
    std::ostringstream os;
    os << "period " << c->period << " (error " << c->error << (c->central_symmetry ? ", central" : "") << ")";
    return os.str();
}

std::string trajectory_summary(const std::vector<Trajectory>& ts) {
    std::ostringstream os;
    os.precision(12);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        os << "trajectory " << k << ": " << ts[k].bounces.size() << " bounces, caustics";
        for (double a : ts[k].caustics.alphas) os << " " << a;
        os << ", drift " << ts[k].max_caustic_drift << ", tallies";
        for (int t : ts[k].tallies) os << " " << t;
        os << ", closure " << closure_text(ts[k].closure) << "\n";
    }
    return os.str();
}

void write_svg(const Scenario& s, const ConfocalFamily& fam, std::vector<double> walls,
               const std::vector<Trajectory>& ts, bool closed, std::ostream* to = nullptr) {
    SvgScene scene;
    scene.axes = fam.axes();
    scene.walls = std::move(walls);
    if (!ts.empty()) scene.caustics = ts[0].caustics.alphas;
    const auto plane = s.analysis.plane.value_or(std::vector<int>{0, 1});
    scene.i = plane[0];
    scene.j = plane[1];
    if (scene.i < 0 || scene.j < 0 || scene.i >= static_cast<int>(fam.dim()) || scene.j >= static_cast<int>(fam.dim()))
        throw Error(ErrorCode::ConfigError, "plane: coordinate index out of range");
    scene.closed = closed;
    for (const auto& t : ts) {
        scene.paths.emplace_back();
        scene.wall_of_vertex.emplace_back();
        for (const auto& b : t.bounces) {
            scene.paths.back().push_back(b.point);
            scene.wall_of_vertex.back().push_back(b.wall);
        }
    }
    const std::string svg = render_svg(scene);
    if (to) *to << svg;
    if (s.outputs.svg) write_file(*s.outputs.svg, svg);
}

void write_csv(const Scenario& s, const std::vector<Trajectory>& ts) {
    if (!s.outputs.csv) return;
    std::ostringstream os;
    write_trajectory_csv(os, ts);
    write_file(*s.outputs.csv, os.str());
}

json family_json(const ConfocalFamily& fam) { return fam.axes(); }

// ---- subcommands ----

int cmd_simulate(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    const DomainSpec spec = domain_of(s, fam);
    const int bounces = s.analysis.bounces.value_or(100);
    const double tol = s.analysis.closure_tol.value_or(1e-7);
    std::vector<Trajectory> ts;
    json arr = json::array();
    for (const Ray& r : rays_of(s, fam, &spec)) {
        Trajectory t = simulate_domain(spec, r, bounces);
        t.closure = detect_closure(t, tol, true, fam.scale());
        arr.push_back(to_json(t));
        ts.push_back(std::move(t));
    }
    write_csv(s, ts);
    std::vector<double> walls{spec.bounds.back().lower.value_or(0)};
    if (spec.bounds.back().upper) walls.push_back(*spec.bounds.back().upper);
    if (s.outputs.svg) write_svg(s, fam, walls, ts, false);
    emit(f, s, "simulate", {{"family", family_json(fam)}, {"trajectories", arr}}, trajectory_summary(ts));
    return kExitOk;
}

int cmd_game(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    if (!s.game) throw Error(ErrorCode::ConfigError, "game: missing (use --betas/--signature)");
    const GameSpec spec{fam, s.game->betas, s.game->signature};
    spec.validate();
    const int rounds = s.analysis.rounds.value_or(10);
    std::vector<Trajectory> ts;
    json arr = json::array();
    for (const Ray& r : rays_of(s, fam, nullptr)) {
        Trajectory t = simulate_game(spec, r, rounds);
        t.closure = detect_closure(t, s.analysis.closure_tol.value_or(1e-7), true, fam.scale());
        arr.push_back(to_json(t));
        ts.push_back(std::move(t));
    }
    write_csv(s, ts);
    if (s.outputs.svg) write_svg(s, fam, s.game->betas, ts, false);
    emit(f, s, "game",
         {{"family", family_json(fam)}, {"betas", s.game->betas}, {"signature", s.game->signature}, {"trajectories", arr}},
         trajectory_summary(ts));
    return kExitOk;
}

int cmd_geodesic(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    if (fam.dim() != 3) throw Error(ErrorCode::OutOfRange, "geodesic billiards need d = 3");
    const double beta = s.domain.value_or(DomainConfig{}).beta;
    if (s.rays.empty()) throw Error(ErrorCode::ConfigError, "geodesic: start point needed (--point)");
    const Vec x = to_vec(s.rays[0].point);
    SurfaceState s0;
    if (s.analysis.alpha) {
        auto st = surface_state_with_caustic(fam, x, *s.analysis.alpha);
        if (!st) throw Error(ErrorCode::ConfigError, "geodesic: no tangent direction with this caustic at the point");
        s0 = *st;
    } else {
        if (s.rays[0].direction.size() != 3) throw Error(ErrorCode::ConfigError, "geodesic: --direction or --alpha needed");
        s0 = project_state(fam, SurfaceState{x, to_vec(s.rays[0].direction)});
    }
    const int bounces = s.analysis.bounces.value_or(20);
    SurfaceTrajectory t = geodesic_billiard(fam, beta, s0, bounces);
    const auto c = detect_surface_closure(fam, t, s.analysis.closure_tol.value_or(1e-7));
    if (s.outputs.csv) {
        std::ostringstream os;
        write_surface_csv(os, {t});
        write_file(*s.outputs.csv, os.str());
    }
    json body{{"family", family_json(fam)}, {"beta", beta}, {"trajectory", to_json(t)}};
    body["closure"] = c ? json{{"period", c->period}, {"error", c->error}} : json(nullptr);
    std::ostringstream os;
    os.precision(12);
    os << t.bounces.size() << " bounces, caustic " << t.alpha << ", caustic drift " << t.max_caustic_drift
       << ", constraint residual " << std::max(t.max_residual.on_quadric, t.max_residual.tangent) << ", closure "
       << (c ? "period " + std::to_string(c->period) : std::string("none")) << "\n";
    emit(f, s, "geodesic", body, os.str());
    return kExitOk;
}

int cmd_caustics(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    json arr = json::array();
    std::ostringstream os;
    os.precision(15);
    for (const Ray& r : rays_of(s, fam, nullptr)) {
        const CausticSet c = caustics_of_line(fam, r);
        arr.push_back(to_json(c));
        for (std::size_t k = 0; k < c.alphas.size(); ++k)
            os << c.alphas[k] << " " << kind_name(classify(fam, c.alphas[k]).kind) << (c.degenerate[k] ? " degenerate" : "")
               << "\n";
    }
    emit(f, s, "caustics", {{"family", family_json(fam)}, {"caustics", arr}}, os.str());
    return kExitOk;
}

std::string report_text(const ConditionReport& r) {
    std::ostringstream os;
    os << condition_kind_name(r.kind) << ": " << r.rows << "x" << r.cols << " matrix, rank " << r.rank
       << ", threshold " << r.threshold << ", verdict " << verdict_name(r.verdict);
    if (r.exact && r.rows == r.cols && r.rows > 0 && !r.matrix.empty()) os << ", determinant " << fraction(r.determinant);
    os << "\n";
    return os.str();
}

int cmd_cayley(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const std::string kind = s.analysis.kind.value_or("planar");
    const int n = s.analysis.period.value_or(s.analysis.m.value_or(3));
    if (s.family.empty()) throw Error(ErrorCode::ConfigError, "family: missing (use --axes)");
    std::vector<Rational> axes;
    for (double a : s.family) axes.push_back(rational_of(a));
    ConditionReport rep;
    json body{{"family", s.family}, {"condition", kind}};

    if (kind == "planar") {
        if (axes.size() != 2) throw Error(ErrorCode::OutOfRange, "planar Cayley needs d = 2");
        if (f.alpha_star) {
            const CausticBracket b = planar_caustic_bracket(s.family[0], s.family[1], n);
            const auto lo = cayley_planar(pencil_discriminant(axes[0], axes[1], b.lo), n);
            const bool certified = sgn(b.det_lo) * sgn(b.det_hi) < 0;
            json report{{"kind", condition_kind_name(ConditionKind::PlanarCayley)},
                        {"exact", true},
                        {"alpha", b.alpha},
                        {"bracket", {fraction(b.lo), fraction(b.hi)}},
                        {"determinant_at_bracket", {fraction(b.det_lo), fraction(b.det_hi)}},
                        {"determinant", certified ? "0" : "nonzero"},
                        {"certificate", "sign change of the exact determinant between rational endpoints"},
                        {"satisfied", certified},
                        {"verdict", verdict_name(certified ? Verdict::Satisfied : Verdict::Inconclusive)},
                        {"rows", lo.rows},
                        {"cols", lo.cols}};
            body["report"] = report;
            std::ostringstream os;
            os.precision(17);
            os << "alpha* = " << b.alpha << " in [" << fraction(b.lo) << ", " << fraction(b.hi) << "]\n"
               << "determinant signs " << sgn(b.det_lo) << " / " << sgn(b.det_hi) << ": determinant "
               << (certified ? "0 at alpha*" : "not certified") << "\n";
            emit(f, s, "cayley", body, os.str());
            return verdict_exit(s, certified ? Verdict::Satisfied : Verdict::Inconclusive);
        }
        const Rational alpha = exact_param(f.alpha, s.analysis.alpha, "alpha (--alpha or --alpha-star)");
        rep = cayley_planar(pencil_discriminant(axes[0], axes[1], alpha), n);
        body["alpha"] = fraction(alpha);
    } else if (kind == "period") {
        std::vector<Rational> alphas;
        if (s.analysis.alphas)
            for (double a : *s.analysis.alphas) alphas.push_back(rational_of(a));
        else if (f.alpha || s.analysis.alpha)
            alphas.push_back(exact_param(f.alpha, s.analysis.alpha, "alpha"));
        if (alphas.size() + 1 != axes.size()) throw Error(ErrorCode::ConfigError, "period: need d - 1 caustics");
        rep = period_condition_ddim(pencil_polynomial(axes, alphas), n, static_cast<int>(axes.size()));
        json al = json::array();
        for (const auto& a : alphas) al.push_back(fraction(a));
        body["alphas"] = al;
    } else if (kind == "two-conic") {
        if (axes.size() != 2) throw Error(ErrorCode::OutOfRange, "two-conic condition needs d = 2");
        const Rational alpha = exact_param(f.alpha, s.analysis.alpha, "alpha");
        const Rational gamma = exact_param(f.gamma, s.analysis.gamma, "gamma");
        if (f.float_mode) {
            auto P = poly_from_factors(std::vector<BigFloat>{big(axes[0]), big(axes[1]), big(alpha)});
            rep = two_point_condition_float(P, BigFloat(0), -1, big(gamma), 1, s.analysis.m.value_or(n), 2,
                                            ConditionKind::TwoConicAlternating, f.ratio_tol);
        } else {
            rep = cayley_two_conic(pencil_polynomial(axes, {alpha}), gamma, s.analysis.m.value_or(n));
        }
        body["alpha"] = fraction(alpha);
        body["gamma"] = fraction(gamma);
    } else if (kind == "game") {
        std::vector<Rational> alphas;
        if (s.analysis.alphas)
            for (double a : *s.analysis.alphas) alphas.push_back(rational_of(a));
        else
            alphas.push_back(exact_param(f.alpha, s.analysis.alpha, "alpha"));
        if (alphas.size() + 1 != axes.size()) throw Error(ErrorCode::ConfigError, "game: need d - 1 caustics");
        const Rational b1 = exact_param(f.beta1, s.analysis.beta1, "beta1");
        const Rational b2 = exact_param(f.beta2, s.analysis.beta2, "beta2");
        const int d = static_cast<int>(axes.size());
        if (f.float_mode) {
            std::vector<BigFloat> roots;
            for (const auto& a : axes) roots.push_back(big(a));
            for (const auto& a : alphas) roots.push_back(big(a));
            rep = two_point_condition_float(poly_from_factors(roots), big(b1), -1, big(b2), 1, s.analysis.m.value_or(n),
                                            d, ConditionKind::TwoEllipsoidGame, f.ratio_tol);
        } else {
            rep = two_ellipsoid_game_condition(pencil_polynomial(axes, alphas), b1, b2, s.analysis.m.value_or(n), d);
        }
        body["beta1"] = fraction(b1);
        body["beta2"] = fraction(b2);
    } else if (kind == "on-quadric") {
        if (axes.size() != 3) throw Error(ErrorCode::OutOfRange, "on-quadric condition needs d = 3");
        const Rational alpha = exact_param(f.alpha, s.analysis.alpha, "alpha");
        const Rational gamma = exact_param(f.gamma, s.analysis.gamma, "gamma");
        body["alpha"] = fraction(alpha);
        body["gamma"] = fraction(gamma);
        if (f.float_mode) {
            rep.kind = ConditionKind::OnQuadricExample;
            rep.exact = false;
            rep.value = on_quadric_residual(s.family, gamma.get_d(), alpha.get_d(), n);
            rep.tolerance = f.ratio_tol;
            rep.satisfied = rep.value < f.ratio_tol;
            rep.verdict = rep.satisfied ? Verdict::Satisfied : Verdict::NotSatisfied;
            rep.note = "smallest singular value of the scaled series matrix";
        } else {
            const OnQuadricReport oq = on_quadric_condition(axes, gamma, alpha, n);
            rep = oq.report;
            body["displayed_satisfied"] = oq.displayed_satisfied;
        }
    } else {
        throw Error(ErrorCode::ConfigError, "kind: expected planar, period, two-conic, game or on-quadric");
    }
    body["n"] = n;
    body["report"] = to_json(rep);
    emit(f, s, "cayley", body, report_text(rep));
    return verdict_exit(s, rep.verdict);
}

// Closest p/q with q <= max_den.
std::pair<long, long> nearest_fraction(double x, long max_den) {
    std::pair<long, long> best{0, 1};
    double err = std::abs(x);
    for (long q = 1; q <= max_den; ++q) {
        const long p = std::lround(x * q);
        if (std::abs(x - double(p) / q) < err - 1e-15) {
            err = std::abs(x - double(p) / q);
            best = {p, q};
        }
    }
    return best;
}

int cmd_rotation(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    if (!s.analysis.alpha) throw Error(ErrorCode::ConfigError, "alpha: missing");
    const double rho = rotation_number(fam, *s.analysis.alpha);
    const auto [p, q] = nearest_fraction(rho, 12);
    const double tol = s.analysis.closure_tol.value_or(1e-9);
    const bool rational = std::abs(rho - double(p) / q) < tol;
    std::ostringstream os;
    os.precision(15);
    os << "rho = " << rho << (rational ? " = " + std::to_string(p) + "/" + std::to_string(q) : std::string()) << "\n";
    emit(f, s, "rotation",
         {{"family", family_json(fam)},
          {"alpha", *s.analysis.alpha},
          {"rotation_number", rho},
          {"nearest_fraction", {p, q}},
          {"rational", rational},
          {"tolerance", tol}},
         os.str());
    return kExitOk;
}

int cmd_closure(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    std::vector<double> caustics;
    if (s.random_rays && !s.random_rays->caustics.empty()) caustics = s.random_rays->caustics;
    else if (s.analysis.alphas) caustics = *s.analysis.alphas;
    else if (s.analysis.alpha) caustics = {*s.analysis.alpha};
    if (caustics.size() + 1 != fam.dim()) throw Error(ErrorCode::ConfigError, "closure: need d - 1 caustics");
    const auto model = billiard_model(fam, caustics);
    LatticeVerdict v;
    json body{{"family", family_json(fam)}, {"caustics", caustics}};
    if (s.game) {
        v = game_condition(model, s.game->betas, s.game->signature);
        body["betas"] = s.game->betas;
        body["signature"] = s.game->signature;
    } else {
        const int n = s.analysis.period.value_or(3);
        const double beta = s.domain.value_or(DomainConfig{}).beta;
        v = game_condition(model, std::vector<double>(n, beta), std::vector<int>(n, 1));
        body["n"] = n;
        body["beta"] = beta;
    }
    body["genus"] = model.genus;
    body["verdict"] = to_json(v);
    std::ostringstream os;
    os << "genus " << model.genus << ", verdict " << verdict_name(v.verdict) << ", residual " << v.residual << "\n";
    emit(f, s, "closure", body, os.str());
    return verdict_exit(s, v.verdict);
}

int cmd_find_caustic(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    if (fam.dim() != 2) throw Error(ErrorCode::OutOfRange, "find-caustic works in d = 2");
    const int n = s.analysis.period.value_or(3);
    const CausticBracket b = planar_caustic_bracket(fam.a(0), fam.a(1), n);
    const double rho = rotation_number(fam, b.alpha);
    std::ostringstream os;
    os.precision(17);
    os << "alpha* = " << b.alpha << " (rotation number " << rho << ")\n";
    emit(f, s, "find-caustic",
         {{"family", family_json(fam)},
          {"period", n},
          {"alpha", b.alpha},
          {"bracket", {fraction(b.lo), fraction(b.hi)}},
          {"determinant_signs", {sgn(b.det_lo), sgn(b.det_hi)}},
          {"rotation_number", rho}},
         os.str());
    return kExitOk;
}

// max(|p_n - p_0| / scale, |v_n - v_0|) after n bounces.
double closure_error(const Trajectory& t, int n, double scale) {
    const Bounce& a = t.bounces.at(0);
    const Bounce& b = t.bounces.at(n);
    return std::max((b.point - a.point).norm() / scale, (b.direction - a.direction).norm());
}

struct PorismRow {
    double alpha = 0;
    double error = 0;
};

// Runs the starts on workers; each start has its own generator seeded by (seed, index).
std::vector<PorismRow> porism_sweep(const ConfocalFamily& fam, double alpha, int n, int starts, std::uint64_t seed,
                                    int workers) {
    std::vector<PorismRow> rows(starts);
    auto job = [&](int k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        auto r = ray_with_caustics(fam, {alpha}, rng);
        if (!r) throw Error(ErrorCode::ConfigError, "porism: no ray with the caustic");
        const Trajectory t = simulate_domain(ellipsoid_domain(fam), *r, n + 1);
        rows[k] = {alpha, closure_error(t, n, fam.scale())};
    };
    if (workers <= 1) {
        for (int k = 0; k < starts; ++k) job(k);
        return rows;
    }
    std::vector<std::future<void>> fut;
    for (int w = 0; w < workers; ++w)
        fut.push_back(std::async(std::launch::async, [&, w] {
            for (int k = w; k < starts; k += workers) job(k);
        }));
    for (auto& x : fut) x.get();
    return rows;
}

int cmd_porism(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    if (fam.dim() != 2) throw Error(ErrorCode::OutOfRange, "porism sweep works in d = 2");
    const int n = s.analysis.period.value_or(3);
    const int starts = s.analysis.starts.value_or(10);
    const double tol = s.analysis.closure_tol.value_or(1e-7);
    const double alpha = s.analysis.alpha ? *s.analysis.alpha : find_planar_caustic(fam.a(0), fam.a(1), n);
    const auto rows = porism_sweep(fam, alpha, n, starts, s.seed, f.workers);
    json arr = json::array();
    std::ostringstream os;
    os.precision(3);
    os << "start  alpha                error       closes\n";
    bool all = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const bool closes = rows[k].error < tol;
        all = all && closes;
        arr.push_back({{"start", k}, {"error", rows[k].error}, {"closes", closes}});
        char line[120];
        std::snprintf(line, sizeof line, "%5zu  %.17g  %.3e  %s\n", k, rows[k].alpha, rows[k].error, closes ? "yes" : "no");
        os << line;
    }
    os << (all ? "all " : "not all ") << rows.size() << " starts close in " << n << " bounces (tol " << tol << ")\n";
    emit(f, s, "porism",
         {{"family", family_json(fam)}, {"period", n}, {"alpha", alpha}, {"tolerance", tol}, {"all_close", all},
          {"starts", arr}},
         os.str());
    return s.analysis.assert_satisfied.value_or(false) && !all ? kExitNotSatisfied : kExitOk;
}

std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_perturb(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const std::string table = s.analysis.table.value_or("v");
    const std::vector<double> gammas = s.analysis.gammas.value_or(std::vector<double>{-1, 0.5, 2, 3});
    const int samples = s.analysis.samples.value_or(10);
    const double lambda = s.analysis.lambda.value_or(1.0);
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> U(0.05, 0.45);
    std::ostringstream csv;
    json summary = json::array();
    if (table == "v" || table == "f4") {
        csv << "gamma,x,y,lambda,xt,yt,f4,diagonals,v\n";
        for (double g : gammas)
            for (int k = 0; k < samples; ++k) {
                const double x = U(rng) * std::sqrt(lambda), y = U(rng) * std::sqrt(lambda);
                const double xt = x * x / lambda, yt = -y * y / lambda;
                const F4Params p{1, 2 - g, 2, 1 - g, xt, yt};
                csv << csv_num(g) << "," << csv_num(x) << "," << csv_num(y) << "," << csv_num(lambda) << ","
                    << csv_num(xt) << "," << csv_num(yt) << "," << csv_num(appell_f4(p)) << ","
                    << appell_f4_diagonals(p) << "," << csv_num(v_gamma(g, x, y, lambda)) << "\n";
            }
    } else if (table == "berdar") {
        csv << "gamma,x,y,lambda,residual,normalized\n";
        for (double g : gammas) {
            std::vector<Point2> pts;
            for (int k = 0; k < samples; ++k)
                pts.push_back({(k % 2 ? -1 : 1) * U(rng) * std::sqrt(lambda), (k % 3 ? 1 : -1) * U(rng) * std::sqrt(lambda)});
            const auto r = berdar_residual([&](double x, double y) { return v_gamma(g, x, y, lambda); }, lambda, pts);
            for (std::size_t k = 0; k < pts.size(); ++k)
                csv << csv_num(g) << "," << csv_num(pts[k].x) << "," << csv_num(pts[k].y) << "," << csv_num(lambda) << ","
                    << csv_num(r.per_sample[k] * r.normalization) << "," << csv_num(r.per_sample[k]) << "\n";
            summary.push_back({{"gamma", g}, {"report", to_json(r)}});
        }
    } else if (table == "jacobi") {
        const std::vector<double> abc = s.analysis.abc.value_or(std::vector<double>{7, 3, 2});
        if (abc.size() != 3) throw Error(ErrorCode::ConfigError, "abc: expected three values");
        std::uniform_real_distribution<double> W(0.3, 1.5);
        csv << "gamma,x,y,z,e1,e2,e3\n";
        for (double g : gammas) {
            std::vector<Point3> pts;
            for (int k = 0; k < samples; ++k) pts.push_back({(k % 2 ? -1 : 1) * W(rng), W(rng), (k % 3 ? 1 : -1) * W(rng)});
            auto V = [&](double x, double y, double z) { return v_gamma_3d(g, x, y, z, abc[0], abc[1], abc[2]); };
            for (const auto& p : pts) {
                const auto e = jacobi_system_sample(V, abc[0], abc[1], abc[2], p);
                csv << csv_num(g) << "," << csv_num(p.x) << "," << csv_num(p.y) << "," << csv_num(p.z) << ","
                    << csv_num(e[0].residual) << "," << csv_num(e[1].residual) << "," << csv_num(e[2].residual) << "\n";
            }
            summary.push_back({{"gamma", g}, {"report", to_json(jacobi_system_residual(V, abc[0], abc[1], abc[2], pts))}});
        }
    } else {
        throw Error(ErrorCode::ConfigError, "table: expected v, f4, berdar or jacobi");
    }
    if (s.outputs.csv) write_file(*s.outputs.csv, csv.str());
    emit(f, s, "perturb", {{"table", table}, {"gammas", gammas}, {"samples", samples}, {"summary", summary}},
         s.outputs.csv ? std::string() : csv.str());
    return kExitOk;
}

int cmd_render(const Flags& f) {
    const Scenario s = effective_scenario(f);
    const ConfocalFamily fam = family_of(s);
    const int bounces = s.analysis.bounces.value_or(8);
    const double tol = s.analysis.closure_tol.value_or(1e-7);
    std::vector<Trajectory> ts;
    std::vector<double> walls;
    if (s.game) {
        const GameSpec spec{fam, s.game->betas, s.game->signature};
        spec.validate();
        walls = s.game->betas;
        for (const Ray& r : rays_of(s, fam, nullptr)) ts.push_back(simulate_game(spec, r, bounces));
    } else {
        const DomainSpec spec = domain_of(s, fam);
        walls = {spec.bounds.back().lower.value_or(0)};
        if (spec.bounds.back().upper) walls.push_back(*spec.bounds.back().upper);
        for (const Ray& r : rays_of(s, fam, &spec)) ts.push_back(simulate_domain(spec, r, bounces + 1));
    }
    bool closed = true;
    json arr = json::array();
    for (auto& t : ts) {
        const bool enough = static_cast<int>(t.bounces.size()) > bounces;
        const double err = enough ? closure_error(t, bounces, fam.scale()) : INFINITY;
        closed = closed && err < tol;
        if (enough) t.bounces.resize(bounces);
        std::vector<int> tallies(walls.size(), 0);
        for (const auto& b : t.bounces)
            if (b.wall >= 0 && b.wall < static_cast<int>(tallies.size())) ++tallies[b.wall];
        t.tallies = tallies;
        arr.push_back({{"bounces", t.bounces.size()}, {"tallies", tallies}, {"closure_error", err}});
    }
    std::ostringstream svg;
    write_svg(s, fam, walls, ts, closed, s.outputs.svg ? nullptr : &svg);
    std::ostringstream os;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        os << "path " << k << ": " << ts[k].bounces.size() << " vertices, per wall";
        for (int t : ts[k].tallies) os << " " << t;
        os << (closed ? ", closed" : ", open") << "\n";
    }
    const std::string text = s.outputs.svg ? os.str() : svg.str();
    emit(f, s, "render", {{"family", family_json(fam)}, {"walls", walls}, {"closed", closed}, {"paths", arr}}, text);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Billiards in confocal quadrics: simulation, closure conditions, geodesics, perturbations"};
    app.require_subcommand(1);
    app.fallthrough();
    Flags f;
    app.add_option("--scenario,-s", f.scenario, "Scenario file (YAML)");
    app.add_flag("--json", f.json, "Print the JSON document instead of text");
    app.add_option("--out,-o", f.out, "Write the JSON document to this path");
    app.add_option("--csv", f.csv, "Write a CSV table to this path");
    app.add_option("--svg", f.svg, "Write an SVG rendering to this path");
    app.add_option("--seed", f.seed, "Random seed");
    app.add_option("--axes", f.axes, "Semi-axes squared a1 > ... > ad > 0")->delimiter(',');
    app.add_flag("--assert", f.assert_mode, "Exit 2 when the condition fails, 3 when inconclusive");
    app.add_flag("--dump-scenario", f.dump_scenario, "Print the effective scenario and exit");

    auto rays = [&](CLI::App* c) {
        c->add_option("--point", f.point, "Start point")->delimiter(',');
        c->add_option("--direction", f.direction, "Start direction")->delimiter(',');
        c->add_option("--caustics", f.caustics, "Random rays with these caustics")->delimiter(',');
        c->add_option("--count", f.count, "Number of random rays");
    };

    auto* sim = app.add_subcommand("simulate", "Billiard inside a domain bounded by confocal quadrics");
    rays(sim);
    sim->add_option("--beta", f.beta, "Outer wall parameter");
    sim->add_option("--inner", f.inner, "Inner wall parameter (annulus)");
    sim->add_option("--bounces", f.bounces, "Number of bounces");
    sim->add_option("--closure-tol", f.closure_tol, "Closure tolerance");
    sim->add_option("--plane", f.plane, "Projection plane for --svg")->delimiter(',');

    auto* game = app.add_subcommand("game", "Ordered billiard game");
    rays(game);
    game->add_option("--betas", f.betas, "Wall parameters in order")->delimiter(',');
    game->add_option("--signature", f.signature, "+1 inside, -1 outside, per wall")->delimiter(',');
    game->add_option("--rounds", f.rounds, "Rounds through the walls");
    game->add_option("--closure-tol", f.closure_tol, "Closure tolerance");

    auto* geo = app.add_subcommand("geodesic", "Geodesic billiard on the ellipsoid Q_0 (d = 3)");
    geo->add_option("--point", f.point, "Start point on Q_0")->delimiter(',');
    geo->add_option("--direction", f.direction, "Start tangent direction")->delimiter(',');
    geo->add_option("--alpha", f.alpha, "Caustic; picks the tangent direction at the point");
    geo->add_option("--beta", f.beta, "Boundary quadric parameter");
    geo->add_option("--bounces", f.bounces, "Number of reflections");
    geo->add_option("--closure-tol", f.closure_tol, "Closure tolerance");

    auto* cau = app.add_subcommand("caustics", "Caustics of a line");
    rays(cau);

    auto* cay = app.add_subcommand("cayley", "Exact Cayley-type condition reports");
    cay->add_option("--kind", f.kind, "planar | period | two-conic | game | on-quadric");
    cay->add_option("--n", f.n, "Period");
    cay->add_option("--m", f.m, "Bounces per wall (two-conic, game)");
    cay->add_option("--alpha", f.alpha, "Caustic, exact decimal or p/q");
    cay->add_option("--alphas", f.alphas, "Caustics for d > 2")->delimiter(',');
    cay->add_option("--gamma", f.gamma, "Second conic or on-quadric boundary");
    cay->add_option("--beta1", f.beta1, "First ellipsoid of the game");
    cay->add_option("--beta2", f.beta2, "Second ellipsoid of the game");
    cay->add_flag("--alpha-star", f.alpha_star, "Planar: certify the zero at the bisected caustic");
    cay->add_flag("--float", f.float_mode, "Two-point and on-quadric kinds in 50-digit floating point");
    cay->add_option("--ratio-tol", f.ratio_tol, "Singular value threshold in --float mode");

    auto* rot = app.add_subcommand("rotation", "Rotation number (d = 2)");
    rot->add_option("--alpha", f.alpha, "Caustic");
    rot->add_option("--closure-tol", f.closure_tol, "Rationality tolerance");

    auto* clo = app.add_subcommand("closure", "Abel-Jacobi closure verdicts");
    clo->add_option("--alpha", f.alpha, "Caustic (d = 2)");
    clo->add_option("--alphas", f.alphas, "Caustics")->delimiter(',');
    clo->add_option("--n", f.n, "Period inside the ellipsoid");
    clo->add_option("--beta", f.beta, "Boundary parameter");
    clo->add_option("--betas", f.betas, "Game walls")->delimiter(',');
    clo->add_option("--signature", f.signature, "Game signature")->delimiter(',');

    auto* fc = app.add_subcommand("find-caustic", "Caustic with period n by exact bisection (d = 2)");
    fc->add_option("--period,--n", f.n, "Period")->required();

    auto* por = app.add_subcommand("porism", "Random-start closure sweep (d = 2)");
    por->add_option("--period,--n", f.n, "Period");
    por->add_option("--starts", f.starts, "Number of starts");
    por->add_option("--alpha", f.alpha, "Caustic; default is the period-n caustic");
    por->add_option("--closure-tol", f.closure_tol, "Closure tolerance");
    por->add_option("--workers", f.workers, "Worker threads");

    auto* per = app.add_subcommand("perturb", "Appell F4, V_gamma and residual tables");
    per->add_option("--table", f.table, "v | f4 | berdar | jacobi");
    per->add_option("--gammas", f.gammas, "Values of gamma")->delimiter(',');
    per->add_option("--samples", f.samples, "Samples per gamma");
    per->add_option("--lambda", f.lambda, "Parameter of the planar equation");
    per->add_option("--abc", f.abc, "A,B,C of the spatial system")->delimiter(',');

    auto* ren = app.add_subcommand("render", "Trajectory to SVG");
    rays(ren);
    ren->add_option("--beta", f.beta, "Outer wall parameter");
    ren->add_option("--inner", f.inner, "Inner wall parameter (annulus)");
    ren->add_option("--betas", f.betas, "Game walls")->delimiter(',');
    ren->add_option("--signature", f.signature, "Game signature")->delimiter(',');
    ren->add_option("--bounces", f.bounces, "Number of vertices");
    ren->add_option("--plane", f.plane, "Projection plane i,j")->delimiter(',');
    ren->add_option("--closure-tol", f.closure_tol, "Closure tolerance");

    CLI11_PARSE(app, argc, argv);

    try {
        if (f.dump_scenario) {
            std::cout << dump_scenario(effective_scenario(f));
            return kExitOk;
        }
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "simulate") return cmd_simulate(f);
        if (cmd == "game") return cmd_game(f);
        if (cmd == "geodesic") return cmd_geodesic(f);
        if (cmd == "caustics") return cmd_caustics(f);
        if (cmd == "cayley") return cmd_cayley(f);
        if (cmd == "rotation") return cmd_rotation(f);
        if (cmd == "closure") return cmd_closure(f);
        if (cmd == "find-caustic") return cmd_find_caustic(f);
        if (cmd == "porism") return cmd_porism(f);
        if (cmd == "perturb") return cmd_perturb(f);
        if (cmd == "render") return cmd_render(f);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
