#pragma once

#include <Eigen/Dense>
#include <gmpxx.h>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "confocal/poly.hpp"

namespace confocal {

using Vec = Eigen::VectorXd;

enum class ErrorCode {
    InvalidFamily,
    NonfiniteInput,
    DegenerateQuadric,
    DegenerateLine,
    NotOnQuadric,
    EscapedDomain,
    StalledRay,
    NoSuchBounce,
    UnboundedGame,
    TangentStep,
    RepeatedAxis,
    BranchPoint,
    OutOfRange,
    PeriodTooShort,
    BranchPointInterior,
    NegativePolynomial,
    GenusUnsupported,
    StepRejected,
    TangentialIntersection,
    DivergentSeries,
    PoleParameter,
    DomainError,
    NonsmoothPoint,
    ConfigError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

struct ToleranceProfile {
    double on_quadric = 1e-9;   // relative to a_1
    double unit = 1e-12;
    double pencil = 1e-9;       // singular value ratio
    double step_eps = 1e-10;    // relative to scene scale

    bool operator==(const ToleranceProfile&) const = default;
};

class ConfocalFamily {
public:
    explicit ConfocalFamily(std::vector<double> axes, ToleranceProfile tol = {});

    std::size_t dim() const { return a_.size(); }
    const std::vector<double>& axes() const { return a_; }
    double a(std::size_t i) const { return a_[i]; }
    double scale() const;  // sqrt(a_1), a length
    const ToleranceProfile& tol() const { return tol_; }

    // Q_lambda(x) = sum x_i^2 / (a_i - lambda)
    double Q(double lambda, const Vec& x) const;
    double Q(double lambda, const Vec& x, const Vec& y) const;
    Vec grad(double lambda, const Vec& x) const;
    bool is_axis(double lambda) const;

private:
    std::vector<double> a_;
    ToleranceProfile tol_;
};

enum class QuadricKind { Ellipsoid, Hyperboloid, Degenerate };

struct QuadricParam {
    double lambda = 0;
    QuadricKind kind = QuadricKind::Ellipsoid;
    int index = 0;  // s with lambda in (a_{s+1}, a_s), or s with lambda = a_s
};

QuadricParam classify(const ConfocalFamily& family, double lambda);
const char* kind_name(QuadricKind kind);

struct EllipticCoordinates {
    std::vector<double> lambda;     // descending, lambda_1 > ... > lambda_d
    std::vector<bool> degenerate;   // coordinate pinned to a_s because x_s = 0
};

EllipticCoordinates elliptic_coordinates(const ConfocalFamily& family, const Vec& x);

// Inverse map into the orthant selected by signs (+1/-1 per axis).
Vec cartesian_from_elliptic(const ConfocalFamily& family, const std::vector<double>& lambda,
                            const std::vector<int>& signs);

// (a_1 - x)...(a_d - x)(alpha_1 - x)...(alpha_{d-1} - x)
Poly<mpq_class> pencil_polynomial(const std::vector<mpq_class>& axes,
                                  const std::vector<mpq_class>& alphas);
Poly<double> pencil_polynomial(const ConfocalFamily& family, const std::vector<double>& alphas);

struct Ray {
    Vec point;
    Vec direction;
};

Ray make_ray(Vec point, Vec direction);

struct Intersection {
    std::vector<double> t;       // sorted, a tangent double root is reported once
    bool tangent = false;
    double discriminant = 0;     // Phi_lambda(x, y)
};

Intersection intersect(const ConfocalFamily& family, double lambda, const Ray& ray);

// Phi_lambda(x, y) = Q(x,y)^2 - Q(y) (Q(x) - 1)
double line_discriminant(const ConfocalFamily& family, double lambda, const Ray& ray);

struct CausticSet {
    std::vector<double> alphas;      // ascending
    std::vector<bool> degenerate;    // alpha coincides with some a_s
};

// Numerator of Phi_lambda * prod (a_j - lambda), a polynomial of degree d-1 in lambda.
Poly<double> caustic_polynomial(const ConfocalFamily& family, const Ray& ray);
CausticSet caustics_of_line(const ConfocalFamily& family, const Ray& ray);

enum class ReflectionMode { Real, Virtual };

Vec reflect(const ConfocalFamily& family, double lambda, const Vec& point, const Vec& incoming,
            ReflectionMode mode = ReflectionMode::Real);

struct Hyperplane {
    Vec coefficients;  // (n_1, ..., n_d, c) for <n, x> = c
    Vec normal() const { return coefficients.head(coefficients.size() - 1); }
    double offset() const { return coefficients(coefficients.size() - 1); }
};

Hyperplane normalize_hyperplane(Vec coefficients);
Hyperplane tangent_hyperplane(const ConfocalFamily& family, double lambda, const Vec& point);

bool in_pencil(const std::vector<Hyperplane>& planes, double ratio_tol = 1e-9);
double pencil_ratio(const std::vector<Hyperplane>& planes);
bool in_pencil_exact(const std::vector<std::vector<mpq_class>>& planes);

int rational_rank(std::vector<std::vector<mpq_class>> rows);
mpq_class rational_determinant(std::vector<std::vector<mpq_class>> rows);

}  // namespace confocal
