#include "confocal/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace confocal {

namespace {

std::string rational_string(const Rational& q) {
    Rational c = q;
    c.canonicalize();
    return c.get_den() == 1 ? c.get_num().get_str() : c.get_num().get_str() + "/" + c.get_den().get_str();
}

json closure_json(const std::optional<Closure>& c) {
    if (!c) return nullptr;
    return {{"period", c->period}, {"error", c->error}, {"central_symmetry", c->central_symmetry}};
}

}  // namespace

json to_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json to_json(const CausticSet& c) {
    json d = json::array();
    for (bool b : c.degenerate) d.push_back(b);
    return {{"alphas", c.alphas}, {"degenerate", d}};
}

json to_json(const Trajectory& t) {
    json bounces = json::array();
    for (const auto& b : t.bounces)
        bounces.push_back({{"point", to_json(b.point)},
                           {"direction", to_json(b.direction)},
                           {"lambda", b.lambda},
                           {"wall", b.wall},
                           {"plane", b.plane},
                           {"side", side_name(b.side)},
                           {"length", b.length}});
    return {{"caustics", to_json(t.caustics)},
            {"tallies", t.tallies},
            {"max_caustic_drift", t.max_caustic_drift},
            {"closure", closure_json(t.closure)},
            {"bounces", bounces}};
}

json to_json(const SurfaceTrajectory& t) {
    json bounces = json::array();
    for (const auto& b : t.bounces)
        bounces.push_back({{"point", to_json(b.point)}, {"velocity", to_json(b.velocity)}, {"arclength", b.arclength}});
    return {{"alpha", t.alpha},
            {"max_caustic_drift", t.max_caustic_drift},
            {"max_residual", {{"on_quadric", t.max_residual.on_quadric}, {"tangent", t.max_residual.tangent}}},
            {"length", t.length},
            {"bounces", bounces}};
}

json to_json(const ConditionReport& r) {
    json j = {{"kind", condition_kind_name(r.kind)},
              {"exact", r.exact},
              {"rows", r.rows},
              {"cols", r.cols},
              {"rank", r.rank},
              {"threshold", r.threshold},
              {"satisfied", r.satisfied},
              {"verdict", verdict_name(r.verdict)},
              {"value", r.value},
              {"tolerance", r.tolerance}};
    if (r.exact) {
        json m = json::array();
        for (const auto& row : r.matrix) {
            json jr = json::array();
            for (const auto& e : row) jr.push_back(rational_string(e));
            m.push_back(jr);
        }
        j["matrix"] = m;
        if (r.rows == r.cols && r.rows > 0 && !r.matrix.empty()) j["determinant"] = rational_string(r.determinant);
        if (!r.field_matrix.empty()) {
            json f = json::array();
            for (const auto& row : r.field_matrix) {
                json jr = json::array();
                for (const auto& e : row) {
                    json comps = json::array();
                    for (const auto& c : e) comps.push_back(rational_string(c));
                    jr.push_back(comps);
                }
                f.push_back(jr);
            }
            j["field_matrix"] = f;
        }
    } else {
        j["matrix"] = r.float_matrix;
    }
    if (!r.factor.empty()) j["factor"] = r.factor;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

json to_json(const LatticeVerdict& v) {
    json gens = json::array();
    for (Eigen::Index c = 0; c < v.generators.cols(); ++c) gens.push_back(to_json(Vec(v.generators.col(c))));
    json j = {{"verdict", verdict_name(v.verdict)},
              {"vector", to_json(v.vector)},
              {"generators", gens},
              {"combination", v.combination},
              {"residual", v.residual},
              {"tolerance", v.tolerance}};
    if (!v.note.empty()) j["note"] = v.note;
    return j;
}

json to_json(const ResidualReport& r) {
    return {{"max_residual", r.max_residual},
            {"normalization", r.normalization},
            {"normalized", r.normalized},
            {"per_sample", r.per_sample}};
}

json to_json(const JacobiReport& r) {
    json eqs = json::array();
    for (const auto& e : r.equations) eqs.push_back(to_json(e));
    return {{"equations", eqs}, {"normalized", r.normalized}};
}

json document(const std::string& command, json body) {
    json j = {{"schema_version", 1}, {"command", command}};
    for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const std::vector<Trajectory>& ts) {
    const std::size_t d = ts.empty() || ts[0].bounces.empty() ? 0 : ts[0].bounces[0].point.size();
    os << "trajectory,bounce,wall,lambda,side";
    for (std::size_t i = 0; i < d; ++i) os << ",x" << i + 1;
    for (std::size_t i = 0; i < d; ++i) os << ",v" << i + 1;
    os << "\n";
    for (std::size_t k = 0; k < ts.size(); ++k)
        for (std::size_t b = 0; b < ts[k].bounces.size(); ++b) {
            const auto& bn = ts[k].bounces[b];
            os << k << "," << b << "," << bn.wall << "," << num(bn.lambda) << "," << side_name(bn.side);
            for (Eigen::Index i = 0; i < bn.point.size(); ++i) os << "," << num(bn.point(i));
            for (Eigen::Index i = 0; i < bn.direction.size(); ++i) os << "," << num(bn.direction(i));
            os << "\n";
        }
}

void write_surface_csv(std::ostream& os, const std::vector<SurfaceTrajectory>& ts) {
    os << "trajectory,bounce,arclength,x1,x2,x3,v1,v2,v3\n";
    for (std::size_t k = 0; k < ts.size(); ++k)
        for (std::size_t b = 0; b < ts[k].bounces.size(); ++b) {
            const auto& bn = ts[k].bounces[b];
            os << k << "," << b << "," << num(bn.arclength);
            for (int i = 0; i < 3; ++i) os << "," << num(bn.point(i));
            for (int i = 0; i < 3; ++i) os << "," << num(bn.velocity(i));
            os << "\n";
        }
}

std::string render_svg(const SvgScene& s, int size) {
    const double extent = 1.1 * std::sqrt(s.axes.at(0));
    const double half = size / 2.0, k = half / extent;
    char buf[160];
    auto px = [&](double u) { return half + k * u; };
    auto py = [&](double v) { return half - k * v; };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\" viewBox=\"0 0 "
       << size << " " << size << "\">\n";
    auto section = [&](double lambda, const char* cls) {
        const double ri = s.axes.at(s.i) - lambda, rj = s.axes.at(s.j) - lambda;
        if (ri <= 0 || rj <= 0) return;
        std::snprintf(buf, sizeof buf,
                      "<ellipse class=\"%s\" cx=\"%.4f\" cy=\"%.4f\" rx=\"%.4f\" ry=\"%.4f\" fill=\"none\" "
                      "stroke=\"%s\"%s/>\n",
                      cls, half, half, k * std::sqrt(ri), k * std::sqrt(rj),
                      std::string(cls) == "caustic" ? "gray" : "black",
                      std::string(cls) == "caustic" ? " stroke-dasharray=\"4 3\"" : "");
        os << buf;
    };
    for (double w : s.walls) section(w, "wall");
    for (double c : s.caustics) section(c, "caustic");
    for (std::size_t p = 0; p < s.paths.size(); ++p) {
        const auto& path = s.paths[p];
        if (path.empty()) continue;
        os << "<path class=\"trajectory\" fill=\"none\" stroke=\"steelblue\" d=\"";
        for (std::size_t v = 0; v < path.size(); ++v) {
            std::snprintf(buf, sizeof buf, "%s%.4f %.4f ", v ? "L" : "M", px(path[v](s.i)), py(path[v](s.j)));
            os << buf;
        }
        if (s.closed) os << "Z";
        os << "\"/>\n";
        for (std::size_t v = 0; v < path.size(); ++v) {
            const int wall = p < s.wall_of_vertex.size() && v < s.wall_of_vertex[p].size() ? s.wall_of_vertex[p][v] : -1;
            std::snprintf(buf, sizeof buf, "<circle class=\"bounce wall-%d\" cx=\"%.4f\" cy=\"%.4f\" r=\"3\"/>\n", wall,
                          px(path[v](s.i)), py(path[v](s.j)));
            os << buf;
        }
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace confocal
