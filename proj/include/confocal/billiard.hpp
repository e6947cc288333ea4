#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "confocal/core.hpp"

namespace confocal {

// Range of one elliptic coordinate; an absent end is not a wall.
struct CoordinateBound {
    std::optional<double> lower;
    std::optional<double> upper;
};

// Half-space sign * x_axis >= 0, bounded by a coordinate hyperplane.
struct PlaneWall {
    int axis = 0;
    int sign = 1;
};

struct DomainSpec {
    ConfocalFamily family;
    std::vector<CoordinateBound> bounds;  // one per coordinate, lambda_1 first
    std::vector<PlaneWall> planes;

    void validate() const;
    bool contains(const Vec& x, double tol) const;
};

// Interior of Q_beta (default Q_0).
DomainSpec ellipsoid_domain(const ConfocalFamily& family, double beta = 0);
// Region between two confocal ellipsoids, beta_outer < beta_inner < a_d.
DomainSpec annulus_domain(const ConfocalFamily& family, double beta_outer, double beta_inner);

struct GameSpec {
    ConfocalFamily family;
    std::vector<double> betas;
    std::vector<int> signature;

    void validate() const;
};

enum class Side { Inside = 1, Outside = -1 };
const char* side_name(Side s);

struct Bounce {
    Vec point;
    Vec direction;      // outgoing unit direction
    double lambda = 0;  // parameter of the wall; a_s for the plane x_s = 0
    int wall = -1;      // index into the wall list of the generator
    bool plane = false;
    Side side = Side::Inside;
    double length = 0;  // distance to the next bounce
};

struct Closure {
    int period = 0;
    double error = 0;
    bool central_symmetry = false;
};

struct Trajectory {
    std::vector<Bounce> bounces;
    CausticSet caustics;
    std::vector<int> tallies;  // bounces per wall
    double max_caustic_drift = 0;
    std::optional<Closure> closure;
};

struct SimulationOptions {
    double eps = 1e-10;            // relative to the scene scale
    double drift_check = 1e-6;     // escape tolerance for segment midpoints
    bool check_domain = true;
};

Trajectory simulate_domain(const DomainSpec& spec, const Ray& ray0, int max_bounces,
                           const SimulationOptions& opt = {});
Trajectory simulate_game(const GameSpec& spec, const Ray& ray0, int rounds, const SimulationOptions& opt = {});

// Smallest n >= 1 with bounce n matching bounce 0 (position relative to sqrt(a_1), direction absolute).
// With central symmetry allowed, the match (-x, -v) also counts.
std::optional<Closure> detect_closure(const Trajectory& traj, double tol, bool allow_central = false,
                                      double scale = 1);

// Max relative drift of the caustic set over all segments compared with the first one.
double caustic_drift(const ConfocalFamily& family, const Trajectory& traj);

// Random line tangent to the given caustics with its start on Q_{alpha_1} inside Q_0 (d = 2 or 3).
std::optional<Ray> ray_with_caustics(const ConfocalFamily& family, const std::vector<double>& caustics,
                                     std::mt19937_64& rng, int attempts = 1000);

struct VirtualVertex {
    bool ok = false;
    ReflectionMode mode = ReflectionMode::Real;
    double residual = 0;
};

struct VirtualReport {
    bool configuration = false;
    VirtualVertex x1, x2, y1, y2;
};

VirtualReport virtual_configuration(const ConfocalFamily& family, double lambda1, double lambda2, const Vec& X1,
                                    const Vec& X2, const Vec& Y1, const Vec& Y2, double tol = 1e-8);

struct PencilQuadruple {
    Vec X1, X2, Y1, Y2;
    std::vector<Hyperplane> planes;
};

// Two tangent hyperplanes to Q_lambda1 and two to Q_lambda2 taken from one random pencil.
std::optional<PencilQuadruple> pencil_quadruple(const ConfocalFamily& family, double lambda1, double lambda2,
                                                std::mt19937_64& rng, int attempts = 1000);

struct XYZState {
    Vec x;  // (A x, x) = 1
    Vec y;  // unit momentum
};

struct MapStep {
    XYZState next;
    double mu = 0, nu = 0;
};

MapStep billiard_map_step(const ConfocalFamily& family, const XYZState& state);
std::vector<double> xyz_invariants(const std::vector<double>& J2, const Vec& x, const Vec& y);
std::vector<double> xyz_invariants(const ConfocalFamily& family, const Vec& x, const Vec& y);
// Zeros of sum F_i / (mu - J_i^2).
std::vector<double> invariant_caustics(const std::vector<double>& J2, const std::vector<double>& F);

}  // namespace confocal
