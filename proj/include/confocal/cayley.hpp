#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

#include "confocal/core.hpp"
#include "confocal/poly.hpp"

namespace confocal {

using Rational = mpq_class;
using RPoly = Poly<Rational>;
using BigFloat = boost::multiprecision::cpp_bin_float_50;
using RMatrix = std::vector<std::vector<Rational>>;

// Taylor series of sign * sqrt(P) at x0: B_k = sign * r_k * sqrt(P(x0)), r_0 = 1.
struct SqrtSeries {
    Rational x0;
    int sign = 1;
    Rational p0;
    std::vector<Rational> r;

    int order() const { return static_cast<int>(r.size()) - 1; }
    double coefficient(int k) const;
    // truncated series squared, expressed in t = x - x0
    RPoly squared() const;
};

SqrtSeries sqrt_series(const RPoly& P, const Rational& x0, int sign, int order);

enum class ConditionKind { PlanarCayley, TwoConicAlternating, DDimPeriod, TwoEllipsoidGame, OnQuadricExample };
const char* condition_kind_name(ConditionKind kind);

enum class Verdict { Satisfied, NotSatisfied, PeriodTooShort, Inconclusive };
const char* verdict_name(Verdict v);

struct ConditionReport {
    ConditionKind kind = ConditionKind::PlanarCayley;
    bool exact = true;
    int rows = 0, cols = 0;
    // exact mode: rational matrix after factoring out the common surd
    RMatrix matrix;
    std::string factor;                   // description of the factored surd
    // two-point exact mode: entries in Q(sqrt u, sqrt v) as 4 rationals each
    std::vector<std::vector<std::vector<Rational>>> field_matrix;
    std::vector<std::vector<double>> float_matrix;
    Rational determinant = 0;             // square exact case
    double value = 0;                     // determinant (double) or singular value ratio
    int rank = 0;
    int threshold = 0;                    // satisfied iff rank < threshold
    bool satisfied = false;
    Verdict verdict = Verdict::NotSatisfied;
    double tolerance = 0;                 // 0 in exact mode
    std::string note;
};

// D(t) = (1 + t(a1-alpha)/a1)(1 + t(a2-alpha)/a2)(1 + t), the discriminant of the pencil
// spanned by the boundary ellipse (lambda = 0) and the caustic alpha, normalized by D(0) = 1.
RPoly pencil_discriminant(const Rational& a1, const Rational& a2, const Rational& alpha);

// Smallest caustic alpha in (0, a2) whose billiard inside x^2/a1 + y^2/a2 = 1 closes after n bounces:
// first sign change of the exact determinant on a grid, refined by bisection at rational samples.
// The endpoints carry opposite determinant signs, so the zero between them is certified by continuity.
struct CausticBracket {
    Rational lo, hi;
    Rational det_lo, det_hi;
    double alpha = 0;  // midpoint
};
CausticBracket planar_caustic_bracket(double a1, double a2, int n, int grid = 400, int iterations = 60);
double find_planar_caustic(double a1, double a2, int n, int grid = 400, int iterations = 60);

// Rank test for n(P - infinity) = 0 on y^2 = P, deg P = 2g+1, with the series at P.
ConditionReport point_order_condition(const SqrtSeries& s, int n, int g);

ConditionReport cayley_planar(const RPoly& D, int n);
ConditionReport period_condition_ddim(const RPoly& P, int n, int d);

// Two-point matrix: column r (d <= r <= m) is phi_r = (y - sum_{k<r} E_k (x-x0)^k)/(x-x0)^r with
// E the series at x0; row i (1 <= i <= m-1) is the order-i Taylor coefficient at x1 scaled by
// (x1-x0)^{i+r}. The condition is rank < m-d+1.
ConditionReport two_point_condition(const RPoly& P, const Rational& x0, int s0, const Rational& x1,
                                    int s1, int m, int d, ConditionKind kind);
ConditionReport two_point_condition_float(const Poly<BigFloat>& P, const BigFloat& x0, int s0,
                                          const BigFloat& x1, int s1, int m, int d,
                                          ConditionKind kind, double ratio_tol = 1e-20);

// P = (a1 - x)(a2 - x)(alpha - x); boundary at x = 0, second conic at x = gamma.
ConditionReport cayley_two_conic(const RPoly& P, const Rational& gamma, int m, int s0 = -1,
                                 int s_gamma = 1);
// The unreduced 2m x 2m determinant with f_j = x^j (0<=j<=m), f_{m+i} = x^{i-1} y (1<=i<=m-1).
BigFloat cayley_two_conic_full_determinant(const Poly<BigFloat>& P, const BigFloat& gamma, int m,
                                           int s0 = -1, int s_gamma = 1);

ConditionReport two_ellipsoid_game_condition(const RPoly& P, const Rational& beta1,
                                             const Rational& beta2, int m, int d, int s1 = -1,
                                             int s2 = 1);

// d = 3 surface billiard: a = (a1, a2, a3), boundary gamma, caustic alpha, a3 < gamma < alpha < a2.
// Curve y^2 = P1(x) = -x(a1-x)(a2-x)(a3-x)(alpha-x) is moved by u = 1/(alpha - x) to
// v^2 = -u(alpha u - 1)prod((a_i - alpha)u + 1), sending P_alpha to infinity.
struct OnQuadricReport {
    ConditionReport report;       // rank test for n(A(P_gamma) - A(P_alpha)) = 0
    RMatrix displayed;            // Hankel block C_{p+1+i+j} as typeset with the example
    int displayed_threshold = 0;
    bool displayed_satisfied = false;
    RPoly transformed;            // v^2 as a polynomial in u
    Rational u_gamma;
};
OnQuadricReport on_quadric_condition(const std::vector<Rational>& axes, const Rational& gamma,
                                     const Rational& alpha, int n);

// Series of the transformed curve at u_gamma, in double precision, for searches over real parameters.
std::vector<double> on_quadric_series(const std::vector<double>& axes, double gamma, double alpha,
                                      int order);
// Smallest singular value of the rank test with entries C_k u_gamma^k / C_0; 1 when the test is empty.
double on_quadric_residual(const std::vector<double>& axes, double gamma, double alpha, int n);

struct OnQuadricInstance {
    double gamma = 0;
    double alpha = 0;
    double residual = 0;
};

// Local minima of the residual on a grid over a3 < gamma < alpha < a2, refined by Nelder-Mead;
// returns the best refined point with residual below tol.
std::optional<OnQuadricInstance> find_on_quadric_instance(const std::vector<double>& axes, int n, int grid = 80,
                                                          double tol = 1e-10);

// Symbolic entries: sum_k e_k E_k g^k + sum_k f_k F_k g^k, where E is the series at the first
// point and F the series at the second point, in the letters used by a fixture.
struct LinearForm {
    std::vector<Rational> b;  // coefficients of B_k g^k
    std::vector<Rational> c;  // coefficients of C_k g^k
    bool operator==(const LinearForm& o) const;
};
using SymbolicMatrix = std::vector<std::vector<LinearForm>>;

LinearForm parse_linear_form(const std::string& text);
std::string format_linear_form(const LinearForm& f);

// expanded_letter is 'B' or 'C': the letter of the series at the first point.
SymbolicMatrix symbolic_two_point_matrix(int m, const std::vector<int>& columns, char expanded_letter);
SymbolicMatrix apply_row_transform(const std::vector<std::vector<int>>& T, const SymbolicMatrix& M);

struct Fixture {
    std::string name;
    int m = 0;
    std::vector<int> columns;
    char expanded_letter = 'B';
    std::vector<std::vector<int>> row_transform;
    std::vector<std::vector<std::string>> printed;
};
std::vector<Fixture> printed_fixtures();

struct EntryMismatch {
    int row = 0, col = 0;
    std::string printed, derived;
};
struct FixtureComparison {
    std::string name;
    SymbolicMatrix derived;
    std::vector<EntryMismatch> mismatches;
    int entries = 0;
};
FixtureComparison compare_fixture(const Fixture& f);

// Evaluate a symbolic matrix numerically for given B, C values and g.
std::vector<std::vector<double>> evaluate_symbolic(const SymbolicMatrix& M, const std::vector<double>& B,
                                                   const std::vector<double>& C, double g);

}  // namespace confocal
