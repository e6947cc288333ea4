#pragma once

#include <array>
#include <functional>
#include <vector>

#include "confocal/core.hpp"

namespace confocal {

struct F4Params {
    double a = 0, b = 0, c = 0, d = 0;
    double x = 0, y = 0;
};

// Appell F4, summed over diagonals m + n = N until three consecutive diagonals
// contribute less than tol * |sum|.
double appell_f4(const F4Params& p, double tol = 1e-16, int max_diagonals = 20000);

// Number of diagonals the last call would need; for tests of the stopping rule.
int appell_f4_diagonals(const F4Params& p, double tol = 1e-16, int max_diagonals = 20000);

// V_gamma in the variables x~ = x^2 / lambda, y~ = -y^2 / lambda; for non-integer gamma the
// power uses |y~| (cut along the negative y~ axis).
double v_gamma(double gamma, double x, double y, double lambda);
double v_gamma_scaled(double gamma, double xt, double yt);

// Potential of the three-dimensional system, built from the same series in the variables
// x^ = x^2 C (C - B) / (z^2 (B - A) A), y^ = y^2 C (A - C) / (z^2 (B - A) B).
double v_gamma_3d(double gamma, double x, double y, double z, double A, double B, double C);

using Field2 = std::function<double(double, double)>;
using Field3 = std::function<double(double, double, double)>;

struct FdOptions {
    double rel_step = 1e-3;  // step relative to the norm of the sample point
    bool richardson = true;
};

struct Point2 {
    double x = 0, y = 0;
};
struct Point3 {
    double x = 0, y = 0, z = 0;
};

struct ResidualSample {
    double residual = 0;   // left-hand side
    double magnitude = 0;  // size of the leading term used for normalization
    double largest_term = 0;
};

// lambda V_xy + 3 (y V_x - x V_y) + (y^2 - x^2) V_xy + x y (V_xx - V_yy) at one point.
ResidualSample berdar_sample(const Field2& V, double lambda, Point2 p, const FdOptions& opt = {});

struct ResidualReport {
    double max_residual = 0;     // max |lhs| over samples
    double normalization = 0;    // max |leading term| over samples, or the largest term if that is negligible
    double normalized = 0;
    std::vector<double> per_sample;
};

ResidualReport berdar_residual(const Field2& V, double lambda, const std::vector<Point2>& samples,
                               const FdOptions& opt = {});

// The three equations of the system in cyclic order; the leading term of each is
// S V_xy (A - B) / (A B) and its cyclic images, S = x^2/A^2 + y^2/B^2 + z^2/C^2.
std::array<ResidualSample, 3> jacobi_system_sample(const Field3& V, double A, double B, double C, Point3 p,
                                                   const FdOptions& opt = {});

struct JacobiReport {
    std::array<ResidualReport, 3> equations;
    double normalized = 0;  // max over the equations
};

JacobiReport jacobi_system_residual(const Field3& V, double A, double B, double C, const std::vector<Point3>& samples,
                                    const FdOptions& opt = {});

}  // namespace confocal
