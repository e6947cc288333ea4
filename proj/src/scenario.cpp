#include "confocal/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace confocal {

namespace {

struct Reader {
    std::string source;

    [[noreturn]] void fail(const YAML::Node& n, const std::string& field, const std::string& msg) const {
        std::ostringstream os;
        os << source;
        if (n.Mark().line >= 0) os << ":" << n.Mark().line + 1 << ":" << n.Mark().column + 1;
        os << ": " << field << ": " << msg;
        throw Error(ErrorCode::ConfigError, os.str());
    }

    void check_keys(const YAML::Node& n, const std::string& field, const std::set<std::string>& allowed) const {
        if (!n.IsMap()) fail(n, field, "expected a table");
        for (const auto& kv : n) {
            const std::string key = kv.first.as<std::string>();
            if (!allowed.count(key)) fail(kv.first, field.empty() ? key : field + "." + key, "unknown field");
        }
    }

    template <class T>
    T scalar(const YAML::Node& n, const std::string& field, const char* what) const {
        if (!n.IsScalar()) fail(n, field, std::string("expected ") + what);
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, field, std::string("expected ") + what);
        }
    }

    double number(const YAML::Node& n, const std::string& field) const {
        const double v = scalar<double>(n, field, "a number");
        if (!std::isfinite(v)) fail(n, field, "expected a finite number");
        return v;
    }

    int integer(const YAML::Node& n, const std::string& field) const { return scalar<int>(n, field, "an integer"); }

    std::string text(const YAML::Node& n, const std::string& field) const {
        return scalar<std::string>(n, field, "a string");
    }

    bool boolean(const YAML::Node& n, const std::string& field) const {
        return scalar<bool>(n, field, "true or false");
    }

    std::vector<double> numbers(const YAML::Node& n, const std::string& field) const {
        if (!n.IsSequence()) fail(n, field, "expected a sequence of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < n.size(); ++i) out.push_back(number(n[i], field + "[" + std::to_string(i) + "]"));
        return out;
    }

    std::vector<int> integers(const YAML::Node& n, const std::string& field) const {
        if (!n.IsSequence()) fail(n, field, "expected a sequence of integers");
        std::vector<int> out;
        for (std::size_t i = 0; i < n.size(); ++i) out.push_back(integer(n[i], field + "[" + std::to_string(i) + "]"));
        return out;
    }
};

ToleranceProfile read_tolerance(const Reader& r, const YAML::Node& n) {
    r.check_keys(n, "tolerance", {"on_quadric", "unit", "pencil", "step_eps"});
    ToleranceProfile t;
    if (n["on_quadric"]) t.on_quadric = r.number(n["on_quadric"], "tolerance.on_quadric");
    if (n["unit"]) t.unit = r.number(n["unit"], "tolerance.unit");
    if (n["pencil"]) t.pencil = r.number(n["pencil"], "tolerance.pencil");
    if (n["step_eps"]) t.step_eps = r.number(n["step_eps"], "tolerance.step_eps");
    return t;
}

AnalysisConfig read_analysis(const Reader& r, const YAML::Node& n) {
    r.check_keys(n, "analysis",
                 {"bounces", "rounds", "period", "starts", "m", "samples", "kind", "table", "alpha", "gamma", "beta1",
                  "beta2", "lambda", "closure_tol", "alphas", "gammas", "abc", "plane", "assert"});
    AnalysisConfig a;
    auto opt_int = [&](const char* key, std::optional<int>& dst) {
        if (n[key]) dst = r.integer(n[key], std::string("analysis.") + key);
    };
    auto opt_num = [&](const char* key, std::optional<double>& dst) {
        if (n[key]) dst = r.number(n[key], std::string("analysis.") + key);
    };
    auto opt_list = [&](const char* key, std::optional<std::vector<double>>& dst) {
        if (n[key]) dst = r.numbers(n[key], std::string("analysis.") + key);
    };
    opt_int("bounces", a.bounces);
    opt_int("rounds", a.rounds);
    opt_int("period", a.period);
    opt_int("starts", a.starts);
    opt_int("m", a.m);
    opt_int("samples", a.samples);
    if (n["kind"]) a.kind = r.text(n["kind"], "analysis.kind");
    if (n["table"]) a.table = r.text(n["table"], "analysis.table");
    opt_num("alpha", a.alpha);
    opt_num("gamma", a.gamma);
    opt_num("beta1", a.beta1);
    opt_num("beta2", a.beta2);
    opt_num("lambda", a.lambda);
    opt_num("closure_tol", a.closure_tol);
    opt_list("alphas", a.alphas);
    opt_list("gammas", a.gammas);
    opt_list("abc", a.abc);
    if (n["plane"]) {
        a.plane = r.integers(n["plane"], "analysis.plane");
        if (a.plane->size() != 2) r.fail(n["plane"], "analysis.plane", "expected two coordinate indices");
    }
    if (n["assert"]) a.assert_satisfied = r.boolean(n["assert"], "analysis.assert");
    return a;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& source) {
    const Reader r{source};
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        std::ostringstream os;
        os << source << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": syntax: " << e.msg;
        throw Error(ErrorCode::ConfigError, os.str());
    }
    if (root.IsNull()) return Scenario{};
    r.check_keys(root, "",
                 {"schema_version", "name", "seed", "family", "tolerance", "domain", "game", "rays", "random_rays",
                  "analysis", "outputs", "acceptance"});
    Scenario s;
    if (root["schema_version"]) {
        s.schema_version = r.integer(root["schema_version"], "schema_version");
        if (s.schema_version != kSchemaVersion)
            r.fail(root["schema_version"], "schema_version", "unsupported version " + std::to_string(s.schema_version));
    }
    if (root["name"]) s.name = r.text(root["name"], "name");
    if (root["seed"]) s.seed = r.scalar<std::uint64_t>(root["seed"], "seed", "a non-negative integer");
    if (root["family"]) {
        s.family = r.numbers(root["family"], "family");
        try {
            ConfocalFamily check(s.family);
        } catch (const Error& e) {
            r.fail(root["family"], "family", e.what());
        }
    }
    if (root["tolerance"]) s.tolerance = read_tolerance(r, root["tolerance"]);
    if (const auto n = root["domain"]) {
        r.check_keys(n, "domain", {"kind", "beta", "inner"});
        DomainConfig d;
        if (n["kind"]) d.kind = r.text(n["kind"], "domain.kind");
        if (d.kind != "ellipsoid" && d.kind != "annulus")
            r.fail(n["kind"], "domain.kind", "expected ellipsoid or annulus");
        if (n["beta"]) d.beta = r.number(n["beta"], "domain.beta");
        if (n["inner"]) d.inner = r.number(n["inner"], "domain.inner");
        if (d.kind == "annulus" && !d.inner) r.fail(n, "domain.inner", "annulus needs an inner wall");
        s.domain = d;
    }
    if (const auto n = root["game"]) {
        r.check_keys(n, "game", {"betas", "signature"});
        GameConfig g;
        if (!n["betas"]) r.fail(n, "game.betas", "missing");
        g.betas = r.numbers(n["betas"], "game.betas");
        if (n["signature"]) g.signature = r.integers(n["signature"], "game.signature");
        if (g.signature.size() != g.betas.size())
            r.fail(n, "game.signature", "expected one sign per wall");
        s.game = g;
    }
    if (const auto n = root["rays"]) {
        if (!n.IsSequence()) r.fail(n, "rays", "expected a sequence of rays");
        for (std::size_t i = 0; i < n.size(); ++i) {
            const std::string f = "rays[" + std::to_string(i) + "]";
            r.check_keys(n[i], f, {"point", "direction"});
            if (!n[i]["point"] || !n[i]["direction"]) r.fail(n[i], f, "needs point and direction");
            RaySpec ray{r.numbers(n[i]["point"], f + ".point"), r.numbers(n[i]["direction"], f + ".direction")};
            if (!s.family.empty() && (ray.point.size() != s.family.size() || ray.direction.size() != s.family.size()))
                r.fail(n[i], f, "dimension differs from the family");
            s.rays.push_back(std::move(ray));
        }
    }
    if (const auto n = root["random_rays"]) {
        r.check_keys(n, "random_rays", {"count", "caustics"});
        RandomRays rr;
        if (n["count"]) rr.count = r.integer(n["count"], "random_rays.count");
        if (n["caustics"]) rr.caustics = r.numbers(n["caustics"], "random_rays.caustics");
        s.random_rays = rr;
    }
    if (root["analysis"]) s.analysis = read_analysis(r, root["analysis"]);
    if (const auto n = root["outputs"]) {
        r.check_keys(n, "outputs", {"json", "csv", "svg"});
        if (n["json"]) s.outputs.json = r.text(n["json"], "outputs.json");
        if (n["csv"]) s.outputs.csv = r.text(n["csv"], "outputs.csv");
        if (n["svg"]) s.outputs.svg = r.text(n["svg"], "outputs.svg");
    }
    if (const auto n = root["acceptance"]) {
        if (!n.IsMap()) r.fail(n, "acceptance", "expected a table of criteria");
        for (const auto& kv : n) {
            const std::string crit = kv.first.as<std::string>();
            if (!kv.second.IsMap()) r.fail(kv.second, "acceptance." + crit, "expected a table of parameters");
            auto& params = s.acceptance[crit];
            for (const auto& p : kv.second) {
                const std::string key = p.first.as<std::string>();
                params[key] = r.number(p.second, "acceptance." + crit + "." + key);
            }
        }
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

namespace {

void emit_list(YAML::Emitter& e, const std::vector<double>& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (double x : v) e << x;
    e << YAML::EndSeq;
}

void emit_list(YAML::Emitter& e, const std::vector<int>& v) {
    e << YAML::Flow << YAML::BeginSeq;
    for (int x : v) e << x;
    e << YAML::EndSeq;
}

}  // namespace

std::string dump_scenario(const Scenario& s) {
    YAML::Emitter e;
    e.SetDoublePrecision(17);
    e << YAML::BeginMap;
    e << YAML::Key << "schema_version" << YAML::Value << s.schema_version;
    if (!s.name.empty()) e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << s.name;
    e << YAML::Key << "seed" << YAML::Value << s.seed;
    if (!s.family.empty()) {
        e << YAML::Key << "family" << YAML::Value;
        emit_list(e, s.family);
    }
    if (s.tolerance) {
        e << YAML::Key << "tolerance" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "on_quadric" << YAML::Value << s.tolerance->on_quadric;
        e << YAML::Key << "unit" << YAML::Value << s.tolerance->unit;
        e << YAML::Key << "pencil" << YAML::Value << s.tolerance->pencil;
        e << YAML::Key << "step_eps" << YAML::Value << s.tolerance->step_eps;
        e << YAML::EndMap;
    }
    if (s.domain) {
        e << YAML::Key << "domain" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "kind" << YAML::Value << s.domain->kind;
        e << YAML::Key << "beta" << YAML::Value << s.domain->beta;
        if (s.domain->inner) e << YAML::Key << "inner" << YAML::Value << *s.domain->inner;
        e << YAML::EndMap;
    }
    if (s.game) {
        e << YAML::Key << "game" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "betas" << YAML::Value;
        emit_list(e, s.game->betas);
        e << YAML::Key << "signature" << YAML::Value;
        emit_list(e, s.game->signature);
        e << YAML::EndMap;
    }
    if (!s.rays.empty()) {
        e << YAML::Key << "rays" << YAML::Value << YAML::BeginSeq;
        for (const auto& r : s.rays) {
            e << YAML::BeginMap << YAML::Key << "point" << YAML::Value;
            emit_list(e, r.point);
            e << YAML::Key << "direction" << YAML::Value;
            emit_list(e, r.direction);
            e << YAML::EndMap;
        }
        e << YAML::EndSeq;
    }
    if (s.random_rays) {
        e << YAML::Key << "random_rays" << YAML::Value << YAML::BeginMap;
        e << YAML::Key << "count" << YAML::Value << s.random_rays->count;
        e << YAML::Key << "caustics" << YAML::Value;
        emit_list(e, s.random_rays->caustics);
        e << YAML::EndMap;
    }
    const AnalysisConfig& a = s.analysis;
    if (!(a == AnalysisConfig{})) {
        e << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
        auto put = [&](const char* k, const auto& v) {
            if (v) e << YAML::Key << k << YAML::Value << *v;
        };
        auto put_list = [&](const char* k, const auto& v) {
            if (v) {
                e << YAML::Key << k << YAML::Value;
                emit_list(e, *v);
            }
        };
        put("bounces", a.bounces);
        put("rounds", a.rounds);
        put("period", a.period);
        put("starts", a.starts);
        put("m", a.m);
        put("samples", a.samples);
        put("kind", a.kind);
        put("table", a.table);
        put("alpha", a.alpha);
        put("gamma", a.gamma);
        put("beta1", a.beta1);
        put("beta2", a.beta2);
        put("lambda", a.lambda);
        put("closure_tol", a.closure_tol);
        put_list("alphas", a.alphas);
        put_list("gammas", a.gammas);
        put_list("abc", a.abc);
        put_list("plane", a.plane);
        put("assert", a.assert_satisfied);
        e << YAML::EndMap;
    }
    if (!(s.outputs == OutputConfig{})) {
        e << YAML::Key << "outputs" << YAML::Value << YAML::BeginMap;
        if (s.outputs.json) e << YAML::Key << "json" << YAML::Value << *s.outputs.json;
        if (s.outputs.csv) e << YAML::Key << "csv" << YAML::Value << *s.outputs.csv;
        if (s.outputs.svg) e << YAML::Key << "svg" << YAML::Value << *s.outputs.svg;
        e << YAML::EndMap;
    }
    if (!s.acceptance.empty()) {
        e << YAML::Key << "acceptance" << YAML::Value << YAML::BeginMap;
        for (const auto& [crit, params] : s.acceptance) {
            e << YAML::Key << crit << YAML::Value << YAML::BeginMap;
            for (const auto& [k, v] : params) e << YAML::Key << k << YAML::Value << v;
            e << YAML::EndMap;
        }
        e << YAML::EndMap;
    }
    e << YAML::EndMap;
    return std::string(e.c_str()) + "\n";
}

ToleranceProfile parse_tolerance(const std::string& text, ToleranceProfile base) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigError, "tolerance: expected key=value, got " + item);
        const std::string key = item.substr(0, eq);
        double v = 0;
        try {
            v = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "tolerance." + key + ": expected a number");
        }
        if (key == "on_quadric") base.on_quadric = v;
        else if (key == "unit") base.unit = v;
        else if (key == "pencil") base.pencil = v;
        else if (key == "step_eps") base.step_eps = v;
        else throw Error(ErrorCode::ConfigError, "tolerance." + key + ": unknown field");
    }
    return base;
}

ToleranceProfile effective_tolerance(const Scenario& s) {
    if (s.tolerance) return *s.tolerance;
    if (const char* env = std::getenv("CONFOCAL_TOLERANCE")) return parse_tolerance(env);
    return {};
}

double acceptance_param(const Scenario& s, const std::string& criterion, const std::string& key, double fallback) {
    const auto c = s.acceptance.find(criterion);
    if (c == s.acceptance.end()) return fallback;
    const auto v = c->second.find(key);
    return v == c->second.end() ? fallback : v->second;
}

}  // namespace confocal
