#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "confocal/core.hpp"

namespace confocal {

inline constexpr int kSchemaVersion = 1;

struct RaySpec {
    std::vector<double> point;
    std::vector<double> direction;

    bool operator==(const RaySpec&) const = default;
};

struct RandomRays {
    int count = 0;
    std::vector<double> caustics;  // empty: uniform point inside, uniform direction

    bool operator==(const RandomRays&) const = default;
};

struct DomainConfig {
    std::string kind = "ellipsoid";  // ellipsoid | annulus
    double beta = 0;                 // outer wall
    std::optional<double> inner;     // inner wall of the annulus

    bool operator==(const DomainConfig&) const = default;
};

struct GameConfig {
    std::vector<double> betas;
    std::vector<int> signature;

    bool operator==(const GameConfig&) const = default;
};

struct AnalysisConfig {
    std::optional<int> bounces, rounds, period, starts, m, samples;
    std::optional<std::string> kind, table;
    std::optional<double> alpha, gamma, beta1, beta2, lambda, closure_tol;
    std::optional<std::vector<double>> alphas, gammas, abc;
    std::optional<std::vector<int>> plane;
    std::optional<bool> assert_satisfied;

    bool operator==(const AnalysisConfig&) const = default;
};

struct OutputConfig {
    std::optional<std::string> json, csv, svg;

    bool operator==(const OutputConfig&) const = default;
};

struct Scenario {
    int schema_version = kSchemaVersion;
    std::string name;
    std::uint64_t seed = 0;
    std::vector<double> family;
    std::optional<ToleranceProfile> tolerance;
    std::optional<DomainConfig> domain;
    std::optional<GameConfig> game;
    std::vector<RaySpec> rays;
    std::optional<RandomRays> random_rays;
    AnalysisConfig analysis;
    OutputConfig outputs;
    std::map<std::string, std::map<std::string, double>> acceptance;  // per-criterion parameters

    bool operator==(const Scenario&) const = default;
};

// Errors are ConfigError with "source:line:column: field: message".
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::string& path);
std::string dump_scenario(const Scenario& s);

// "on_quadric=1e-9,pencil=1e-8"; unknown keys are ConfigError.
ToleranceProfile parse_tolerance(const std::string& text, ToleranceProfile base = {});

// Scenario tolerance, else CONFOCAL_TOLERANCE, else defaults.
ToleranceProfile effective_tolerance(const Scenario& s);

double acceptance_param(const Scenario& s, const std::string& criterion, const std::string& key, double fallback);

}  // namespace confocal
