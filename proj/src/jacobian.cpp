#include "confocal/jacobian.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace confocal {

namespace {

using boost::math::quadrature::gauss_kronrod;

double gk(const std::function<double(double)>& f, double a, double b) {
    double err = 0;
    return gauss_kronrod<double, 61>::integrate(f, a, b, 17, 1e-14, &err);
}

// P / (x - r) by synthetic division
Poly<double> deflate(const Poly<double>& P, double r) {
    const int n = static_cast<int>(P.size()) - 1;
    Poly<double> q(n, 0.0);
    double acc = P[n];
    for (int k = n - 1; k >= 0; --k) {
        q[k] = acc;
        acc = P[k] + acc * r;
    }
    return q;
}

double root_scale(const HyperellipticModel& m) {
    double s = 1;
    for (double r : m.branch_points) s = std::max(s, std::abs(r));
    return s;
}

int match_branch(const HyperellipticModel& m, double x) {
    const double tol = 1e-12 * root_scale(m);
    for (std::size_t k = 0; k < m.branch_points.size(); ++k)
        if (std::abs(m.branch_points[k] - x) <= tol) return static_cast<int>(k);
    return -1;
}

// integral over [a, b] with a < b, no branch point inside
double oriented_integral(const HyperellipticModel& m, int i, double a, double b) {
    const int ka = match_branch(m, a), kb = match_branch(m, b);
    const double tol = 1e-12 * root_scale(m);
    for (double r : m.branch_points)
        if (r > a + tol && r < b - tol)
            throw Error(ErrorCode::BranchPointInterior, "branch point inside the integration interval");
    if (m((a + b) / 2) < 0) throw Error(ErrorCode::NegativePolynomial, "P < 0 on the integration interval");
    const double L = b - a;
    if (ka >= 0 && kb >= 0) {
        const double ra = m.branch_points[ka], rb = m.branch_points[kb];
        const Poly<double> q = deflate(deflate(m.P, ra), rb);
        // x = a + L sin^2(t): dx / sqrt((x - a)(b - x)) = 2 dt
        return gk(
            [&](double t) {
                const double s = std::sin(t);
                const double x = a + L * s * s;
                return 2 * std::pow(x, i) / std::sqrt(std::max(-poly_eval(q, x), 0.0));
            },
            0, M_PI / 2);
    }
    if (ka >= 0) {
        const Poly<double> q = deflate(m.P, m.branch_points[ka]);
        return gk(
            [&](double t) {
                const double s = std::sin(t), c = std::cos(t);
                const double x = a + L * s * s;
                return 2 * std::sqrt(L) * c * std::pow(x, i) / std::sqrt(std::max(poly_eval(q, x), 0.0));
            },
            0, M_PI / 2);
    }
    if (kb >= 0) {
        const Poly<double> q = deflate(m.P, m.branch_points[kb]);
        return gk(
            [&](double t) {
                const double s = std::sin(t), c = std::cos(t);
                const double x = b - L * s * s;
                return 2 * std::sqrt(L) * c * std::pow(x, i) / std::sqrt(std::max(-poly_eval(q, x), 0.0));
            },
            0, M_PI / 2);
    }
    return gk([&](double x) { return std::pow(x, i) / std::sqrt(m(x)); }, a, b);
}

std::vector<double> breakpoints(const HyperellipticModel& m, double lo, double hi) {
    std::vector<double> pts{lo};
    for (double r : m.branch_points)
        if (r > lo && r < hi) pts.push_back(r);
    pts.push_back(hi);
    return pts;
}

}  // namespace

HyperellipticModel make_model(const Poly<double>& P0) {
    HyperellipticModel m;
    m.P = P0;
    poly_trim(m.P);
    const int deg = static_cast<int>(m.P.size()) - 1;
    if (deg < 1) throw Error(ErrorCode::OutOfRange, "constant polynomial");
    m.genus = (deg - 1) / 2;
    m.branch_points = real_roots(m.P);
    m.regular = static_cast<int>(m.branch_points.size()) == deg;
    const double scale = std::max(1.0, m.branch_points.empty() ? 1.0 : std::abs(m.branch_points.back()));
    for (std::size_t k = 1; k < m.branch_points.size(); ++k)
        if (m.branch_points[k] - m.branch_points[k - 1] < 1e-9 * scale) m.regular = false;
    return m;
}

HyperellipticModel model_from_roots(std::vector<double> roots) {
    HyperellipticModel m;
    m.P = poly_from_factors(roots);
    m.genus = (static_cast<int>(roots.size()) - 1) / 2;
    std::sort(roots.begin(), roots.end());
    m.branch_points = roots;
    const double scale = std::max(1.0, std::abs(roots.back()));
    for (std::size_t k = 1; k < roots.size(); ++k)
        if (roots[k] - roots[k - 1] < 1e-14 * scale) m.regular = false;
    return m;
}

HyperellipticModel billiard_model(const ConfocalFamily& family, const std::vector<double>& caustics) {
    std::vector<double> roots = family.axes();
    roots.insert(roots.end(), caustics.begin(), caustics.end());
    return model_from_roots(roots);
}

HyperellipticModel surface_model(const ConfocalFamily& family, const std::vector<double>& caustics) {
    std::vector<double> roots = family.axes();
    roots.insert(roots.end(), caustics.begin(), caustics.end());
    roots.push_back(0.0);  // the factor -x
    return model_from_roots(roots);
}

double abel_integral(const HyperellipticModel& model, int i, double from, double to, int sign) {
    if (!std::isfinite(from) || !std::isfinite(to)) throw Error(ErrorCode::NonfiniteInput, "nonfinite bound");
    if (from == to) return 0;
    const double v = from < to ? oriented_integral(model, i, from, to) : -oriented_integral(model, i, to, from);
    return sign * v;
}

Eigen::VectorXd abel_vector_real(const HyperellipticModel& model, double from, double to) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(model.genus);
    const double lo = std::min(from, to), hi = std::max(from, to);
    const auto pts = breakpoints(model, lo, hi);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (pts[k + 1] - pts[k] <= 0 || model((pts[k] + pts[k + 1]) / 2) <= 0) continue;
        for (int i = 0; i < model.genus; ++i) v(i) += oriented_integral(model, i, pts[k], pts[k + 1]);
    }
    return from <= to ? v : Eigen::VectorXd(-v);
}

PeriodLattice real_period_lattice(const HyperellipticModel& model) {
    PeriodLattice L;
    const auto& b = model.branch_points;
    std::vector<Eigen::VectorXd> cols;
    for (std::size_t k = 0; k + 1 < b.size(); ++k) {
        if (model((b[k] + b[k + 1]) / 2) <= 0) continue;
        Eigen::VectorXd c(model.genus);
        for (int i = 0; i < model.genus; ++i) c(i) = 2 * oriented_integral(model, i, b[k], b[k + 1]);
        cols.push_back(c);
        L.cycles.emplace_back(b[k], b[k + 1]);
    }
    L.periods.resize(model.genus, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) L.periods.col(j) = cols[j];
    if (cols.empty()) {
        L.condition = std::numeric_limits<double>::infinity();
    } else {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(L.periods);
        const auto s = svd.singularValues();
        const double smin = s(s.size() - 1);
        L.condition = smin > 0 ? s(0) / smin : std::numeric_limits<double>::infinity();
    }
    return L;
}

double rotation_number(const ConfocalFamily& family, double alpha) {
    if (family.dim() != 2) throw Error(ErrorCode::OutOfRange, "rotation number is defined for d = 2");
    if (!(alpha > 0 && alpha < family.a(1))) throw Error(ErrorCode::OutOfRange, "caustic must lie in (0, a2)");
    const auto m = billiard_model(family, {alpha});
    return abel_integral(m, 0, 0, alpha) / (2 * abel_integral(m, 0, family.a(1), family.a(0)));
}

LatticeVerdict lattice_membership(const Eigen::VectorXd& v, const Eigen::MatrixXd& G, long bound, double rel_tol) {
    LatticeVerdict out;
    out.vector = v;
    out.generators = G;
    double gnorm = 0;
    for (Eigen::Index j = 0; j < G.cols(); ++j) gnorm = std::max(gnorm, G.col(j).norm());
    out.tolerance = rel_tol * std::max(gnorm, 1e-300);
    const Eigen::Index k = G.cols(), g = G.rows();
    double best = v.norm();
    std::vector<long> best_c(k, 0);
    if (k > 0) {
        // pick a maximal independent set of columns to solve for, enumerate the rest
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
        qr.setThreshold(1e-10);
        const Eigen::Index r = qr.rank();
        std::vector<Eigen::Index> basis, extra;
        for (Eigen::Index j = 0; j < k; ++j) (j < r ? basis : extra).push_back(qr.colsPermutation().indices()(j));
        if (extra.size() > 2)
            throw Error(ErrorCode::GenusUnsupported, "too many dependent generators for the bounded search");
        Eigen::MatrixXd B(g, r);
        for (Eigen::Index j = 0; j < r; ++j) B.col(j) = G.col(basis[j]);
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> bqr(B);
        std::vector<long> ext(extra.size(), -bound);
        if (extra.empty()) ext.clear();
        for (;;) {
            Eigen::VectorXd w = v;
            for (std::size_t e = 0; e < extra.size(); ++e) w -= static_cast<double>(ext[e]) * G.col(extra[e]);
            const Eigen::VectorXd c = bqr.solve(w);
            // round and try neighbours
            const int nb = static_cast<int>(std::pow(3, r));
            for (int code = 0; code < nb; ++code) {
                int t = code;
                std::vector<long> ci(r);
                bool ok = true;
                for (Eigen::Index j = 0; j < r; ++j) {
                    ci[j] = std::lround(c(j)) + (t % 3) - 1;
                    t /= 3;
                    if (std::labs(ci[j]) > bound) ok = false;
                }
                if (!ok) continue;
                Eigen::VectorXd res = w;
                for (Eigen::Index j = 0; j < r; ++j) res -= static_cast<double>(ci[j]) * B.col(j);
                const double rn = res.norm();
                if (rn < best) {
                    best = rn;
                    std::fill(best_c.begin(), best_c.end(), 0);
                    for (Eigen::Index j = 0; j < r; ++j) best_c[basis[j]] = ci[j];
                    for (std::size_t e = 0; e < extra.size(); ++e) best_c[extra[e]] = ext[e];
                }
            }
            std::size_t e = 0;
            while (e < ext.size() && ext[e] == bound) ext[e++] = -bound;
            if (e == ext.size()) break;
            ++ext[e];
        }
    }
    out.residual = best;
    out.combination = best_c;
    if (best <= out.tolerance) out.verdict = Verdict::Satisfied;
    else if (best < 10 * out.tolerance) out.verdict = Verdict::Inconclusive;
    else out.verdict = Verdict::NotSatisfied;
    return out;
}

LatticeVerdict closure_condition(const HyperellipticModel& model, const std::vector<ClosureWeight>& weights,
                                 long bound, double rel_tol) {
    if (model.genus > 2) throw Error(ErrorCode::GenusUnsupported, "closure search supports genus 1 and 2");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(model.genus);
    for (const auto& w : weights) {
        if (w.count == 0) continue;
        v -= static_cast<double>(w.count * w.sign) * abel_vector_real(model, w.lower, w.upper);
    }
    const PeriodLattice L = real_period_lattice(model);
    LatticeVerdict out = lattice_membership(v, L.periods, bound, rel_tol);
    out.note = "real period lattice; imaginary parts of the Abel map are not tested";
    return out;
}

LatticeVerdict game_condition(const HyperellipticModel& model, const std::vector<double>& betas,
                              const std::vector<int>& signature,
                              const std::vector<std::pair<double, double>>& caustic_pairs, long bound,
                              double rel_tol) {
    if (model.genus > 2) throw Error(ErrorCode::GenusUnsupported, "game search supports genus 1 and 2");
    if (betas.size() != signature.size() || betas.empty())
        throw Error(ErrorCode::OutOfRange, "betas and signature must have equal nonzero length");
    if (model.branch_points.empty()) throw Error(ErrorCode::OutOfRange, "no real branch points");
    const double alpha = model.branch_points.front();
    Eigen::VectorXd v = Eigen::VectorXd::Zero(model.genus);
    for (std::size_t s = 0; s < betas.size(); ++s)
        v += signature[s] * abel_vector_real(model, alpha, betas[s]);
    const PeriodLattice L = real_period_lattice(model);
    Eigen::MatrixXd G(model.genus, L.periods.cols() + static_cast<Eigen::Index>(caustic_pairs.size()));
    G.leftCols(L.periods.cols()) = L.periods / 2;
    for (std::size_t p = 0; p < caustic_pairs.size(); ++p)
        G.col(L.periods.cols() + p) = abel_vector_real(model, caustic_pairs[p].second, caustic_pairs[p].first);
    LatticeVerdict out = lattice_membership(v, G, bound, rel_tol);
    out.note = "half real period lattice plus caustic pairs";
    return out;
}

SurfaceDivisor surface_game_divisor(int i_s, int i_next, double beta_s, double beta_next) {
    if (i_s == 1 && i_next == 1) return {1, 0};
    if (i_s == -1 && i_next == -1) return {0, 1};
    if (i_s == 1 && i_next == -1) {
        if (beta_s < beta_next) return {0, 0};
        if (beta_s > beta_next) return {1, -1};
    }
    if (i_s == -1 && i_next == 1) {
        if (beta_s > beta_next) return {0, 0};
        if (beta_s < beta_next) return {-1, 1};
    }
    throw Error(ErrorCode::OutOfRange, "signature entries must be +1 or -1 with distinct neighbouring betas");
}

double abel_bar(const HyperellipticModel& model, double x) {
    if (model.genus < 2) throw Error(ErrorCode::OutOfRange, "projection needs genus at least 2");
    return abel_vector_real(model, 0.0, x)(1);
}

SurfaceGameReport surface_game_condition(const ConfocalFamily& family, double alpha, const std::vector<double>& betas,
                                         const std::vector<int>& signature, long bound, double rel_tol) {
    if (family.dim() != 3) throw Error(ErrorCode::OutOfRange, "surface games are implemented for d = 3");
    if (betas.size() != signature.size() || betas.empty())
        throw Error(ErrorCode::OutOfRange, "betas and signature must have equal nonzero length");
    const HyperellipticModel m = surface_model(family, {alpha});
    std::vector<double> S = family.axes();
    S.push_back(alpha);
    std::sort(S.begin(), S.end());
    SurfaceGameReport rep;
    const double bmin = *std::min_element(betas.begin(), betas.end());
    const double bmax = *std::max_element(betas.begin(), betas.end());
    bool found = false;
    for (std::size_t k = 0; k + 1 < S.size(); ++k)
        if (S[k] <= bmin && bmax <= S[k + 1]) {
            rep.mu_lower = S[k];
            rep.mu_upper = S[k + 1];
            found = true;
        }
    if (!found) throw Error(ErrorCode::OutOfRange, "boundary quadrics are not of the same type");
    const double Au = abel_bar(m, rep.mu_upper), Al = abel_bar(m, rep.mu_lower);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(1);
    const std::size_t k = betas.size();
    for (std::size_t s = 0; s < k; ++s) {
        const std::size_t nx = (s + 1) % k;
        const SurfaceDivisor D = surface_game_divisor(signature[s], signature[nx], betas[s], betas[nx]);
        rep.divisors.push_back(D);
        v(0) += signature[s] * (abel_bar(m, betas[s]) - D.upper * Au - D.lower * Al);
    }
    const PeriodLattice L = real_period_lattice(m);
    rep.verdict = lattice_membership(v, L.periods.row(1), bound, rel_tol);
    rep.verdict.note = "projection onto the x dx / y component, real period lattice";
    return rep;
}

}  // namespace confocal
