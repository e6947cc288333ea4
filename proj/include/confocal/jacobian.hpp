#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "confocal/cayley.hpp"
#include "confocal/core.hpp"
#include "confocal/poly.hpp"

namespace confocal {

// y^2 = P(x) with real coefficients.
struct HyperellipticModel {
    Poly<double> P;
    int genus = 0;
    std::vector<double> branch_points;  // real roots, ascending
    bool regular = true;                // all roots real and simple
    double operator()(double x) const { return poly_eval(P, x); }
};

HyperellipticModel make_model(const Poly<double>& P);
// prod (r - x) over the given roots; branch points are taken as given rather than recomputed
HyperellipticModel model_from_roots(std::vector<double> roots);
// (a_1 - x)...(a_d - x)(alpha_1 - x)...(alpha_{d-1} - x)
HyperellipticModel billiard_model(const ConfocalFamily& family, const std::vector<double>& caustics);
// -x (a_1 - x)...(a_d - x)(alpha_1 - x)...(alpha_{d-2} - x), the curve of geodesic billiards on Q_0
HyperellipticModel surface_model(const ConfocalFamily& family, const std::vector<double>& caustics);

// sign * integral of x^i dx / sqrt(P) from `from` to `to`.
double abel_integral(const HyperellipticModel& model, int i, double from, double to, int sign = 1);
// Components i = 0..g-1, summing only the subintervals where P > 0.
Eigen::VectorXd abel_vector_real(const HyperellipticModel& model, double from, double to);

struct PeriodLattice {
    Eigen::MatrixXd periods;                         // g x k, column = 2 * integral over a real cycle
    std::vector<std::pair<double, double>> cycles;   // branch point pairs
    double condition = 0;                            // of the periods matrix, inf if rank deficient
};

// Real cycles: bounded intervals between consecutive branch points where P > 0.
PeriodLattice real_period_lattice(const HyperellipticModel& model);

double rotation_number(const ConfocalFamily& family, double alpha);

struct LatticeVerdict {
    Verdict verdict = Verdict::NotSatisfied;
    Eigen::VectorXd vector;          // condition vector
    Eigen::MatrixXd generators;      // columns searched
    std::vector<long> combination;   // best integer coefficients
    double residual = 0;
    double tolerance = 0;
    std::string note;
};

// Smallest |v - G c| over integer c with |c_i| <= N. Columns beyond rank(G) are enumerated.
LatticeVerdict lattice_membership(const Eigen::VectorXd& v, const Eigen::MatrixXd& generators, long bound,
                                  double rel_tol);

struct ClosureWeight {
    long count = 0;      // n_s
    double lower = 0;    // gamma_s'
    double upper = 0;    // gamma_s''
    int sign = 1;        // (-1)^s
};

// v = sum n_s sign_s (A(P_lower) - A(P_upper)) against the real period lattice.
LatticeVerdict closure_condition(const HyperellipticModel& model, const std::vector<ClosureWeight>& weights,
                                 long bound = 64, double rel_tol = 1e-6);

// v = sum i_s (A(P_beta_s) - A(P_alpha)), alpha the smallest branch point; the target set is
// half the real lattice plus the listed caustic pairs A(P_p) - A(P_p').
LatticeVerdict game_condition(const HyperellipticModel& model, const std::vector<double>& betas,
                              const std::vector<int>& signature,
                              const std::vector<std::pair<double, double>>& caustic_pairs = {},
                              long bound = 64, double rel_tol = 1e-6);

// Divisor D_s of the game on Q_0: coefficients of P_mu'' and P_mu'.
struct SurfaceDivisor {
    int upper = 0;  // coefficient of P_mu''
    int lower = 0;  // coefficient of P_mu'
};
SurfaceDivisor surface_game_divisor(int i_s, int i_next, double beta_s, double beta_next);

// Second component of the real Abel map from 0: integral of x dx / sqrt(P_1) over real segments.
double abel_bar(const HyperellipticModel& model, double x);

struct SurfaceGameReport {
    double mu_lower = 0, mu_upper = 0;
    std::vector<SurfaceDivisor> divisors;
    LatticeVerdict verdict;
};

// Game on Q_0 in d = 3 (single caustic alpha), projected to the x dx / y component.
SurfaceGameReport surface_game_condition(const ConfocalFamily& family, double alpha,
                                         const std::vector<double>& betas, const std::vector<int>& signature,
                                         long bound = 64, double rel_tol = 1e-6);

}  // namespace confocal
