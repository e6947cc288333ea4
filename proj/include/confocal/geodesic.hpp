#pragma once

#include <optional>
#include <vector>

#include "confocal/core.hpp"

namespace confocal {

// Point on Q_0 with a unit tangent velocity; d = 3.
struct SurfaceState {
    Vec x;
    Vec v;
};

struct ConstraintResidual {
    double on_quadric = 0;  // |Q_0(x) - 1|
    double tangent = 0;     // |<grad Q_0, v>| / |grad Q_0|
};

ConstraintResidual constraint_residual(const ConfocalFamily& family, const SurfaceState& s);

// Restores Q_0(x) = 1 by a Newton step along the normal and makes v a unit tangent vector.
SurfaceState project_state(const ConfocalFamily& family, SurfaceState s);

// x'' = mu grad Q_0 with mu keeping the curve on Q_0, one RK4 step of length ds, then projected.
SurfaceState geodesic_step(const ConfocalFamily& family, const SurfaceState& s, double ds);

// Caustic of the tangent line; the other caustic of a line tangent to Q_0 is 0.
double surface_caustic(const ConfocalFamily& family, const SurfaceState& s);

struct GeodesicRun {
    SurfaceState final;
    double length = 0;
    ConstraintResidual max_residual;
    double max_caustic_drift = 0;  // relative to a_1
};

GeodesicRun geodesic_flow(const ConfocalFamily& family, SurfaceState s, double ds, int steps);

struct SurfaceBounce {
    Vec point;
    Vec velocity;       // outgoing
    double arclength = 0;
};

struct SurfaceTrajectory {
    std::vector<SurfaceBounce> bounces;
    double alpha = 0;
    double max_caustic_drift = 0;  // relative to a_1
    ConstraintResidual max_residual;
    double length = 0;
};

struct GeodesicOptions {
    double ds = 1e-3;            // relative to sqrt(a_1)
    double crossing_tol = 1e-10;  // bisection width, relative to sqrt(a_1)
    double max_length = 1e3;     // relative to sqrt(a_1); the run stops without further crossings
};

// Geodesic billiard on Q_0 inside the part of Q_0 cut out by Q_beta that contains the start.
SurfaceTrajectory geodesic_billiard(const ConfocalFamily& family, double beta, const SurfaceState& s0,
                                    int max_bounces, const GeodesicOptions& opt = {});

struct SurfaceClosure {
    int period = 0;
    double error = 0;
};

std::optional<SurfaceClosure> detect_surface_closure(const ConfocalFamily& family, const SurfaceTrajectory& t,
                                                     double tol);

// Crossing of a geodesic with Q_beta; entering means moving into the side `domain_side`.
struct Crossing {
    Vec point;
    Vec velocity;
    double arclength = 0;
    bool entering = false;
};

// Crossings met within the given length; negative length runs backwards.
std::vector<Crossing> geodesic_crossings(const ConfocalFamily& family, double beta, int domain_side,
                                         const SurfaceState& s, double length, const GeodesicOptions& opt = {});

struct TBetaResult {
    SurfaceState image;              // the reflected geodesic at its base point in S_2
    bool identity = false;           // no transversal crossing found
    std::vector<Crossing> s1, s2;    // crossings of the original geodesic in the window
    double max_s2_distance = 0;      // worst distance from an S_2 point to the image, relative to sqrt(a_1)
    double max_reflection_residual = 0;
    double min_s1_distance = 0;      // closest approach of the image to an S_1 point
};

// Reflects the geodesic through s at its first exit from the domain side and checks the image
// against every exit point in the window [0, window].
TBetaResult t_beta(const ConfocalFamily& family, double beta, int domain_side, const SurfaceState& s,
                   double window, const GeodesicOptions& opt = {});

// Distance from (point, velocity) to the crossings of the geodesic through s, searched over
// +-window; small values mean the two geodesics coincide.
double geodesic_line_distance(const ConfocalFamily& family, double beta, int domain_side, const SurfaceState& s,
                              const SurfaceState& probe, double window, const GeodesicOptions& opt = {});

// Start state at a given point of Q_0 with a tangent direction touching Q_alpha.
std::optional<SurfaceState> surface_state_with_caustic(const ConfocalFamily& family, const Vec& x, double alpha,
                                                       int branch = 1);

}  // namespace confocal
