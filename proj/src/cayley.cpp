#include "confocal/cayley.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/eigen.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <sstream>

namespace confocal {

namespace {

mpz_class binom(long n, long k) {
    if (k < 0) return 0;
    if (n >= 0) {
        if (k > n) return 0;
        mpz_class r;
        mpz_bin_uiui(r.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
        return r;
    }
    // binom(-r, k) = (-1)^k binom(r + k - 1, k)
    mpz_class r = binom(-n + k - 1, k);
    return (k % 2) ? mpz_class(-r) : r;
}

Rational rpow(const Rational& x, int k) {
    Rational r = 1;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

bool rational_sqrt(const Rational& q, Rational& out) {
    if (q < 0) return false;
    mpz_class n = q.get_num(), d = q.get_den();
    if (!mpz_perfect_square_p(n.get_mpz_t()) || !mpz_perfect_square_p(d.get_mpz_t())) return false;
    mpz_class sn, sd;
    mpz_sqrt(sn.get_mpz_t(), n.get_mpz_t());
    mpz_sqrt(sd.get_mpz_t(), d.get_mpz_t());
    out = Rational(sn, sd);
    out.canonicalize();
    return true;
}

// Q(s_u, s_v) with s_u^2 = u, s_v^2 = v; basis {1, s_u, s_v, s_u s_v}.
struct Field {
    Rational u, v;
    bool u_sq = false, v_sq = false, uv_sq = false;
    Rational wu, wv, wuv;

    Field(Rational u_, Rational v_) : u(std::move(u_)), v(std::move(v_)) {
        u_sq = rational_sqrt(u, wu);
        v_sq = rational_sqrt(v, wv);
        if (!u_sq && !v_sq) {
            uv_sq = rational_sqrt(u * v, wuv);
            // s_u s_v = sqrt(u) sqrt(v): -sqrt(uv) when both are negative
            if (uv_sq && u < 0) wuv = -wuv;
        }
    }

    using E = std::array<Rational, 4>;

    void reduce(E& x) const {
        if (u_sq) {
            x[0] += x[1] * wu;
            x[1] = 0;
            x[2] += x[3] * wu;
            x[3] = 0;
        }
        if (v_sq) {
            x[0] += x[2] * wv;
            x[2] = 0;
            x[1] += x[3] * wv;
            x[3] = 0;
        }
        if (uv_sq) {
            x[0] += x[3] * wuv;
            x[3] = 0;
            x[1] += x[2] * wuv / u;
            x[2] = 0;
        }
    }
    E mul(const E& a, const E& b) const {
        E c;
        c[0] = a[0] * b[0] + u * a[1] * b[1] + v * a[2] * b[2] + u * v * a[3] * b[3];
        c[1] = a[0] * b[1] + a[1] * b[0] + v * (a[2] * b[3] + a[3] * b[2]);
        c[2] = a[0] * b[2] + a[2] * b[0] + u * (a[1] * b[3] + a[3] * b[1]);
        c[3] = a[0] * b[3] + a[3] * b[0] + a[1] * b[2] + a[2] * b[1];
        reduce(c);
        return c;
    }
    E sub(const E& a, const E& b) const {
        E c;
        for (int i = 0; i < 4; ++i) c[i] = a[i] - b[i];
        return c;
    }
    static bool zero(const E& a) {
        return a[0] == 0 && a[1] == 0 && a[2] == 0 && a[3] == 0;
    }
    E inv(const E& x) const {
        E conj{x[0], x[1], -x[2], -x[3]};
        E z = mul(x, conj);  // in Q(s_u)
        const Rational den = z[0] * z[0] - z[1] * z[1] * u;
        E zi{z[0] / den, -z[1] / den, 0, 0};
        return mul(conj, zi);
    }
    double approx(const E& x) const {
        const double su = std::sqrt(u.get_d()), sv = std::sqrt(v.get_d());
        return x[0].get_d() + x[1].get_d() * su + x[2].get_d() * sv + x[3].get_d() * su * sv;
    }
};

struct FieldElimination {
    int rank = 0;
    Field::E det{1, 0, 0, 0};
};

FieldElimination field_eliminate(const Field& F, std::vector<std::vector<Field::E>> m) {
    FieldElimination out;
    const std::size_t rows = m.size(), cols = rows ? m[0].size() : 0;
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && Field::zero(m[piv][c])) ++piv;
        if (piv == rows) {
            out.det = {0, 0, 0, 0};
            continue;
        }
        if (piv != r) {
            std::swap(m[piv], m[r]);
            for (auto& e : out.det) e = -e;
        }
        out.det = F.mul(out.det, m[r][c]);
        const Field::E pinv = F.inv(m[r][c]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            if (Field::zero(m[i][c])) continue;
            const Field::E f = F.mul(m[i][c], pinv);
            for (std::size_t k = c; k < cols; ++k) m[i][k] = F.sub(m[i][k], F.mul(f, m[r][k]));
        }
        ++r;
    }
    out.rank = static_cast<int>(r);
    if (rows != cols || out.rank < static_cast<int>(rows)) out.det = {0, 0, 0, 0};
    return out;
}

void finish_rank(ConditionReport& rep) {
    rep.satisfied = rep.rank < rep.threshold;
    rep.verdict = rep.satisfied ? Verdict::Satisfied : Verdict::NotSatisfied;
}

std::vector<BigFloat> big_sqrt_series(const Poly<BigFloat>& P, const BigFloat& x0, int sign, int order) {
    Poly<BigFloat> c = poly_taylor(P, x0);
    c.resize(std::max<std::size_t>(c.size(), order + 1), BigFloat(0));
    if (c[0] == 0) throw Error(ErrorCode::BranchPoint, "expansion point is a branch point");
    std::vector<BigFloat> b(order + 1);
    b[0] = BigFloat(sign) * sqrt(c[0]);
    for (int k = 1; k <= order; ++k) {
        BigFloat s = 0;
        for (int j = 1; j < k; ++j) s += b[j] * b[k - j];
        b[k] = (c[k] - s) / (2 * b[0]);
    }
    return b;
}

}  // namespace

double SqrtSeries::coefficient(int k) const {
    return sign * r.at(k).get_d() * std::sqrt(p0.get_d());
}

RPoly SqrtSeries::squared() const {
    const int K = order();
    RPoly s(K + 1, Rational(0));
    for (int i = 0; i <= K; ++i)
        for (int j = 0; i + j <= K; ++j) s[i + j] += r[i] * r[j];
    for (auto& v : s) v *= p0;
    return s;
}

SqrtSeries sqrt_series(const RPoly& P, const Rational& x0, int sign, int order) {
    if (order < 0) throw Error(ErrorCode::OutOfRange, "negative order");
    RPoly c = poly_taylor(P, x0);
    c.resize(std::max<std::size_t>(c.size(), order + 1), Rational(0));
    SqrtSeries s;
    s.x0 = x0;
    s.sign = sign >= 0 ? 1 : -1;
    s.p0 = c[0];
    if (s.p0 == 0) throw Error(ErrorCode::BranchPoint, "expansion point is a branch point");
    s.r.assign(order + 1, Rational(0));
    s.r[0] = 1;
    for (int k = 1; k <= order; ++k) {
        Rational acc = c[k] / s.p0;
        for (int j = 1; j < k; ++j) acc -= s.r[j] * s.r[k - j];
        s.r[k] = acc / 2;
    }
    return s;
}

const char* condition_kind_name(ConditionKind kind) {
    switch (kind) {
        case ConditionKind::PlanarCayley: return "planar-cayley";
        case ConditionKind::TwoConicAlternating: return "two-conic-alternating";
        case ConditionKind::DDimPeriod: return "d-dim-period";
        case ConditionKind::TwoEllipsoidGame: return "two-ellipsoid-game";
        case ConditionKind::OnQuadricExample: return "on-quadric-example";
    }
    return "unknown";
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Satisfied: return "satisfied";
        case Verdict::NotSatisfied: return "not-satisfied";
        case Verdict::PeriodTooShort: return "period-too-short";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "unknown";
}

RPoly pencil_discriminant(const Rational& a1, const Rational& a2, const Rational& alpha) {
    RPoly p{Rational(1), (a1 - alpha) / a1};
    p = poly_mul(p, RPoly{Rational(1), (a2 - alpha) / a2});
    return poly_mul(p, RPoly{Rational(1), Rational(1)});
}

CausticBracket planar_caustic_bracket(double a1, double a2, int n, int grid, int iterations) {
    if (!(a1 > a2 && a2 > 0)) throw Error(ErrorCode::InvalidFamily, "need a1 > a2 > 0");
    const Rational A1(a1), A2(a2);
    auto det_at = [&](double alpha) {
        return cayley_planar(pencil_discriminant(A1, A2, Rational(alpha)), n).determinant;
    };
    double lo = a2 * 1e-6;
    const int s0 = sgn(det_at(lo));
    double hi = -1;
    for (int k = 1; k <= grid; ++k) {
        const double x = a2 * k / (grid + 1.0);
        if (sgn(det_at(x)) != s0) {
            hi = x;
            break;
        }
        lo = x;
    }
    if (hi < 0) throw Error(ErrorCode::OutOfRange, "no sign change of the determinant in (0, a2)");
    for (int it = 0; it < iterations && hi - lo > 0; ++it) {
        const double mid = lo + (hi - lo) / 2;
        if (mid == lo || mid == hi) break;
        (sgn(det_at(mid)) == s0 ? lo : hi) = mid;
    }
    return {Rational(lo), Rational(hi), det_at(lo), det_at(hi), lo + (hi - lo) / 2};
}

double find_planar_caustic(double a1, double a2, int n, int grid, int iterations) {
    return planar_caustic_bracket(a1, a2, n, grid, iterations).alpha;
}

ConditionReport point_order_condition(const SqrtSeries& s, int n, int g) {
    ConditionReport rep;
    rep.exact = true;
    const int m = n / 2;
    int rows, cols;
    if (n % 2 == 0) {
        rows = m - 1;
        cols = m - g;
    } else {
        rows = m;
        cols = m - g + 1;
    }
    rep.threshold = cols;
    if (cols <= 0 || rows <= 0) {
        rep.verdict = Verdict::PeriodTooShort;
        rep.note = "n <= 2g: the divisor n(P - infinity) is not principal for a non-branch point";
        return rep;
    }
    const int need = m + rows;  // largest index m + 1 + (rows - 1)
    if (s.order() < need) throw Error(ErrorCode::OutOfRange, "series order too small");
    rep.rows = rows;
    rep.cols = cols;
    rep.matrix.assign(rows, std::vector<Rational>(cols));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) rep.matrix[i][j] = s.r[m + 1 + i - j];
    rep.factor = "sign*sqrt(P(x0))";
    rep.rank = rational_rank(rep.matrix);
    if (rows == cols) {
        rep.determinant = rational_determinant(rep.matrix);
        rep.value = rep.determinant.get_d();
    }
    finish_rank(rep);
    return rep;
}

ConditionReport cayley_planar(const RPoly& D, int n) {
    if (n < 3) throw Error(ErrorCode::OutOfRange, "n must be at least 3");
    const int p = n / 2;
    const bool even = n % 2 == 0;
    const int size = even ? p - 1 : p;
    const int first = even ? 3 : 2;
    SqrtSeries s = sqrt_series(D, Rational(0), 1, first + 2 * (size - 1));
    ConditionReport rep;
    rep.kind = ConditionKind::PlanarCayley;
    rep.rows = rep.cols = size;
    rep.threshold = size;
    rep.matrix.assign(size, std::vector<Rational>(size));
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) rep.matrix[i][j] = s.r[first + i + j];
    rep.factor = "sqrt(D(0))^" + std::to_string(size);
    rep.determinant = rational_determinant(rep.matrix);
    rep.value = rep.determinant.get_d();
    rep.rank = rational_rank(rep.matrix);
    rep.satisfied = rep.determinant == 0;
    rep.verdict = rep.satisfied ? Verdict::Satisfied : Verdict::NotSatisfied;
    return rep;
}

ConditionReport period_condition_ddim(const RPoly& P, int n, int d) {
    ConditionReport rep;
    rep.kind = ConditionKind::DDimPeriod;
    if (d < 2) throw Error(ErrorCode::OutOfRange, "d must be at least 2");
    if (n < d) {
        rep.verdict = Verdict::PeriodTooShort;
        rep.note = "period below the dimension: closure only inside a plane of symmetry";
        return rep;
    }
    SqrtSeries s = sqrt_series(P, Rational(0), 1, 2 * n - 1);
    rep.rows = n - 1;
    rep.cols = n - d + 1;
    rep.threshold = rep.cols;
    rep.matrix.assign(rep.rows, std::vector<Rational>(rep.cols));
    for (int i = 0; i < rep.rows; ++i)
        for (int j = 0; j < rep.cols; ++j) rep.matrix[i][j] = s.r[n + 1 + i - j];
    rep.factor = "sqrt(P(0))";
    rep.rank = rational_rank(rep.matrix);
    if (rep.rows == rep.cols) {
        rep.determinant = rational_determinant(rep.matrix);
        rep.value = rep.determinant.get_d();
    }
    finish_rank(rep);
    return rep;
}

// ---- symbolic two-point pipeline ----

bool LinearForm::operator==(const LinearForm& o) const {
    auto norm = [](std::vector<Rational> v) {
        while (!v.empty() && v.back() == 0) v.pop_back();
        return v;
    };
    return norm(b) == norm(o.b) && norm(c) == norm(o.c);
}

SymbolicMatrix symbolic_two_point_matrix(int m, const std::vector<int>& columns, char expanded_letter) {
    SymbolicMatrix M(m - 1, std::vector<LinearForm>(columns.size()));
    for (int i = 1; i <= m - 1; ++i) {
        for (std::size_t col = 0; col < columns.size(); ++col) {
            const int r = columns[col];
            std::vector<Rational> e(std::max(r, 1), Rational(0)), f(i + 1, Rational(0));
            for (int l = 0; l <= i; ++l) {
                const int j = i - l;
                const Rational w(binom(-r, l));
                f[j] += w;
                for (int k = j; k < r; ++k) e[k] -= w * Rational(binom(k, j));
            }
            LinearForm lf;
            if (expanded_letter == 'B') {
                lf.b = e;
                lf.c = f;
            } else {
                lf.c = e;
                lf.b = f;
            }
            M[i - 1][col] = lf;
        }
    }
    return M;
}

SymbolicMatrix apply_row_transform(const std::vector<std::vector<int>>& T, const SymbolicMatrix& M) {
    SymbolicMatrix out(T.size(), std::vector<LinearForm>(M[0].size()));
    for (std::size_t i = 0; i < T.size(); ++i)
        for (std::size_t j = 0; j < M[0].size(); ++j) {
            LinearForm acc;
            for (std::size_t l = 0; l < M.size(); ++l) {
                if (T[i][l] == 0) continue;
                const LinearForm& x = M[l][j];
                acc.b.resize(std::max(acc.b.size(), x.b.size()), Rational(0));
                acc.c.resize(std::max(acc.c.size(), x.c.size()), Rational(0));
                for (std::size_t k = 0; k < x.b.size(); ++k) acc.b[k] += T[i][l] * x.b[k];
                for (std::size_t k = 0; k < x.c.size(); ++k) acc.c[k] += T[i][l] * x.c[k];
            }
            out[i][j] = acc;
        }
    return out;
}

LinearForm parse_linear_form(const std::string& text) {
    LinearForm f;
    std::size_t i = 0;
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::ConfigError, "cannot parse '" + text + "': " + why);
    };
    while (i < text.size()) {
        int sign = 1;
        while (i < text.size() && (text[i] == '+' || text[i] == '-' || text[i] == ' ')) {
            if (text[i] == '-') sign = -sign;
            ++i;
        }
        if (i >= text.size()) break;
        long coef = 1;
        if (std::isdigit(static_cast<unsigned char>(text[i]))) {
            coef = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
                coef = coef * 10 + (text[i++] - '0');
        }
        if (i >= text.size() || (text[i] != 'B' && text[i] != 'C')) fail("expected B or C");
        const char letter = text[i++];
        if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i]))) fail("expected index");
        int idx = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
            idx = idx * 10 + (text[i++] - '0');
        int power = 0;
        if (i < text.size() && text[i] == 'g') {
            ++i;
            power = 1;
            if (i < text.size() && text[i] == '^') {
                ++i;
                power = 0;
                while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
                    power = power * 10 + (text[i++] - '0');
            }
        }
        if (power != idx) fail("power of g must equal the coefficient index");
        auto& v = letter == 'B' ? f.b : f.c;
        if (static_cast<int>(v.size()) <= idx) v.resize(idx + 1, Rational(0));
        v[idx] += sign * coef;
    }
    return f;
}

std::string format_linear_form(const LinearForm& f) {
    std::ostringstream os;
    bool first = true;
    auto emit = [&](char letter, const std::vector<Rational>& v) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (v[k] == 0) continue;
            const Rational a = abs(v[k]);
            if (v[k] < 0) os << '-';
            else if (!first) os << '+';
            if (a != 1) os << a.get_str();
            os << letter << k;
            if (k == 1) os << 'g';
            if (k > 1) os << "g^" << k;
            first = false;
        }
    };
    emit('C', f.c);
    emit('B', f.b);
    if (first) os << '0';
    return os.str();
}

std::vector<std::vector<double>> evaluate_symbolic(const SymbolicMatrix& M, const std::vector<double>& B,
                                                   const std::vector<double>& C, double g) {
    std::vector<std::vector<double>> out(M.size(), std::vector<double>(M[0].size(), 0.0));
    for (std::size_t i = 0; i < M.size(); ++i)
        for (std::size_t j = 0; j < M[i].size(); ++j) {
            double s = 0;
            for (std::size_t k = 0; k < M[i][j].b.size(); ++k)
                s += M[i][j].b[k].get_d() * B.at(k) * std::pow(g, static_cast<double>(k));
            for (std::size_t k = 0; k < M[i][j].c.size(); ++k)
                s += M[i][j].c[k].get_d() * C.at(k) * std::pow(g, static_cast<double>(k));
            out[i][j] = s;
        }
    return out;
}

std::vector<Fixture> printed_fixtures() {
    const std::vector<std::vector<int>> T{{1, 0, 0}, {4, 1, 0}, {6, 4, 1}};
    std::vector<Fixture> fx;
    fx.push_back(Fixture{
        "conic-pair", 4, {4, 3, 2}, 'C', T,
        {{"-4B0+B1g+4C0+3C1g+2C2g^2+C3g^3", "-3B0+B1g+3C0+2C1g+C2g^2", "-2B0+B1g+2C0+C1g"},
         {"-6B0+B2g^2+6C0+6C1g+4C2g^2+3C3g^3", "-6B0+B1g+B2g^2+6C0+4C1g+3C2g^2", "-5B0+2B1g+B2g^2+5C0+3C1g"},
         {"-4B0+B3g^3+4C0+4C1g+4C2g^2+3C3g^3", "-4B0+B2g^2+B3g^3+4C0+4C1g+3C2g^2",
          "-4B0+B1g+B2g^2+B3g^3+4C0+3C1g"}}});
    fx.push_back(Fixture{
        "ellipsoid-pair", 4, {3, 4}, 'B', {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}},
        {{"-3C0+C1g+3B0+2B1g+B2g^2", "-4C0+C1g+4B0+3B1g+2B2g^2+B3g^3"},
         {"6C0-3C1g+C2g^2-6B0-3B1g-B2g^2", "10C0-4C1g-10B0-6B1g-3B2g^2-B3g^3"},
         {"-10C0+6C1g-3C2g^2+C3g^3+10B0+4B1g+B2g^2",
          "-20C0-10C1g-4C2g^2+C3g^3+20B0+10B1g+4B2g^2+B3g^3"}}});
    fx.push_back(Fixture{
        "ellipsoid-pair-reordered", 4, {4, 3}, 'B', T,
        {{"-4C0+C1g+3B1g+2B2g^2+B3g^3", "-3C0+C1g+3B0+2B1g+B2g^2"},
         {"-6C0+C2g^2+6B0+6B1g+5B2g^2+3B3g^3", "-6C0+C1g+C2g^2+6B0+5B1g+3B2g^2"},
         {"-4C0+C3g^3+4B0+4B1g+4B2g^2+3B3g^3", "-4C0+C2g^2+C3g^3+4B0+4B1g+3B2g^2"}}});
    return fx;
}

FixtureComparison compare_fixture(const Fixture& f) {
    FixtureComparison cmp;
    cmp.name = f.name;
    cmp.derived = apply_row_transform(f.row_transform,
                                      symbolic_two_point_matrix(f.m, f.columns, f.expanded_letter));
    for (std::size_t i = 0; i < f.printed.size(); ++i)
        for (std::size_t j = 0; j < f.printed[i].size(); ++j) {
            ++cmp.entries;
            const LinearForm printed = parse_linear_form(f.printed[i][j]);
            if (!(printed == cmp.derived[i][j]))
                cmp.mismatches.push_back({static_cast<int>(i) + 1, static_cast<int>(j) + 1,
                                          format_linear_form(printed),
                                          format_linear_form(cmp.derived[i][j])});
        }
    return cmp;
}

// ---- two-point conditions ----

ConditionReport two_point_condition(const RPoly& P, const Rational& x0, int s0, const Rational& x1,
                                    int s1, int m, int d, ConditionKind kind) {
    if (m < d) throw Error(ErrorCode::OutOfRange, "m must be at least d");
    if (x0 == x1) throw Error(ErrorCode::OutOfRange, "expansion points coincide");
    const SqrtSeries E = sqrt_series(P, x0, s0, m);
    const SqrtSeries F = sqrt_series(P, x1, s1, m);
    const Rational g = x1 - x0;
    std::vector<int> cols;
    for (int r = d; r <= m; ++r) cols.push_back(r);
    const SymbolicMatrix S = symbolic_two_point_matrix(m, cols, 'B');
    const Field field(E.p0, F.p0);
    std::vector<std::vector<Field::E>> M(S.size(), std::vector<Field::E>(cols.size()));
    ConditionReport rep;
    rep.kind = kind;
    rep.rows = static_cast<int>(S.size());
    rep.cols = static_cast<int>(cols.size());
    rep.threshold = rep.cols;
    rep.float_matrix.assign(rep.rows, std::vector<double>(rep.cols));
    rep.field_matrix.assign(rep.rows, std::vector<std::vector<Rational>>(rep.cols));
    for (int i = 0; i < rep.rows; ++i)
        for (int j = 0; j < rep.cols; ++j) {
            Rational su = 0, sv = 0;
            const LinearForm& lf = S[i][j];
            for (std::size_t k = 0; k < lf.b.size(); ++k) su += lf.b[k] * E.r[k] * rpow(g, k);
            for (std::size_t k = 0; k < lf.c.size(); ++k) sv += lf.c[k] * F.r[k] * rpow(g, k);
            Field::E e{0, E.sign * su, F.sign * sv, 0};
            field.reduce(e);
            M[i][j] = e;
            rep.field_matrix[i][j] = {e[0], e[1], e[2], e[3]};
            rep.float_matrix[i][j] = field.approx(e);
        }
    const FieldElimination el = field_eliminate(field, M);
    rep.rank = el.rank;
    if (rep.rows == rep.cols) rep.value = field.approx(el.det);
    rep.factor = "entries in Q(sqrt(P(x0)), sqrt(P(x1))), basis {1, su, sv, su*sv}";
    finish_rank(rep);
    return rep;
}

namespace {

using BigMatrix = Eigen::Matrix<BigFloat, Eigen::Dynamic, Eigen::Dynamic>;

BigFloat singular_ratio(const BigMatrix& m, int rank_needed) {
    Eigen::JacobiSVD<BigMatrix> svd(m);
    const auto s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0) return BigFloat(0);
    return s(rank_needed - 1) / s(0);
}

}  // namespace

ConditionReport two_point_condition_float(const Poly<BigFloat>& P, const BigFloat& x0, int s0,
                                          const BigFloat& x1, int s1, int m, int d,
                                          ConditionKind kind, double ratio_tol) {
    if (m < d) throw Error(ErrorCode::OutOfRange, "m must be at least d");
    const std::vector<BigFloat> E = big_sqrt_series(P, x0, s0, m);
    const std::vector<BigFloat> F = big_sqrt_series(P, x1, s1, m);
    const BigFloat g = x1 - x0;
    std::vector<int> cols;
    for (int r = d; r <= m; ++r) cols.push_back(r);
    const SymbolicMatrix S = symbolic_two_point_matrix(m, cols, 'B');
    BigMatrix M(S.size(), cols.size());
    ConditionReport rep;
    rep.kind = kind;
    rep.exact = false;
    rep.rows = static_cast<int>(S.size());
    rep.cols = static_cast<int>(cols.size());
    rep.threshold = rep.cols;
    rep.tolerance = ratio_tol;
    rep.float_matrix.assign(rep.rows, std::vector<double>(rep.cols));
    for (int i = 0; i < rep.rows; ++i)
        for (int j = 0; j < rep.cols; ++j) {
            BigFloat acc = 0;
            const LinearForm& lf = S[i][j];
            for (std::size_t k = 0; k < lf.b.size(); ++k)
                acc += BigFloat(lf.b[k].get_str()) * E[k] * pow(g, static_cast<int>(k));
            for (std::size_t k = 0; k < lf.c.size(); ++k)
                acc += BigFloat(lf.c[k].get_str()) * F[k] * pow(g, static_cast<int>(k));
            M(i, j) = acc;
            rep.float_matrix[i][j] = static_cast<double>(acc);
        }
    const BigFloat ratio = singular_ratio(M, rep.cols);
    rep.value = static_cast<double>(ratio);
    rep.rank = ratio < BigFloat(ratio_tol) ? rep.cols - 1 : rep.cols;
    finish_rank(rep);
    return rep;
}

ConditionReport cayley_two_conic(const RPoly& D, const Rational& gamma, int m, int s0, int s_gamma) {
    if (gamma == 0) throw Error(ErrorCode::OutOfRange, "gamma must be nonzero");
    return two_point_condition(D, Rational(0), s0, gamma, s_gamma, m, 2, ConditionKind::TwoConicAlternating);
}

BigFloat cayley_two_conic_full_determinant(const Poly<BigFloat>& D, const BigFloat& gamma, int m, int s0,
                                           int s_gamma) {
    const int N = 2 * m;
    BigMatrix M(N, N);
    const BigFloat pts[2] = {BigFloat(0), gamma};
    const int signs[2] = {s0, s_gamma};
    for (int half = 0; half < 2; ++half) {
        const BigFloat x0 = pts[half];
        const std::vector<BigFloat> y = big_sqrt_series(D, x0, signs[half], m);
        for (int k = 0; k < m; ++k) {
            const int row = half * m + k;
            for (int j = 0; j <= m; ++j) {
                // order-k Taylor coefficient of x^j at x0
                BigFloat v = 0;
                if (k <= j) v = BigFloat(binom(j, k).get_str()) * pow(x0, j - k);
                M(row, j) = v;
            }
            for (int i = 1; i <= m - 1; ++i) {
                // x^{i-1} y
                BigFloat v = 0;
                for (int l = 0; l <= std::min(k, i - 1); ++l)
                    v += BigFloat(binom(i - 1, l).get_str()) * pow(x0, i - 1 - l) * y[k - l];
                M(row, m + i) = v;
            }
        }
    }
    return M.fullPivLu().determinant();
}

ConditionReport two_ellipsoid_game_condition(const RPoly& P, const Rational& beta1, const Rational& beta2,
                                             int m, int d, int s1, int s2) {
    return two_point_condition(P, beta1, s1, beta2, s2, m, d, ConditionKind::TwoEllipsoidGame);
}

// ---- surface example ----

namespace {

template <class T>
Poly<T> on_quadric_polynomial(const std::vector<T>& a, const T& alpha) {
    Poly<T> p{T(0), T(1)};                        // u
    p = poly_mul(p, Poly<T>{T(1), T(-1) * alpha});  // (1 - alpha u) = -(alpha u - 1)
    for (const auto& ai : a) p = poly_mul(p, Poly<T>{T(1), ai - alpha});
    return p;
}

}  // namespace

OnQuadricReport on_quadric_condition(const std::vector<Rational>& a, const Rational& gamma,
                                     const Rational& alpha, int n) {
    if (a.size() != 3) throw Error(ErrorCode::OutOfRange, "the surface example is for d = 3");
    if (!(a[0] > a[1] && a[1] > a[2] && a[2] > 0)) throw Error(ErrorCode::OutOfRange, "axes order");
    if (!(a[2] < gamma && gamma < alpha && alpha < a[1]))
        throw Error(ErrorCode::OutOfRange, "need a3 < gamma < alpha < a2");
    OnQuadricReport out;
    out.transformed = on_quadric_polynomial(a, alpha);
    out.u_gamma = 1 / (alpha - gamma);
    const int p = n / 2;
    const int order = std::max(n, 3 * p + 1);
    const SqrtSeries s = sqrt_series(out.transformed, out.u_gamma, 1, order);
    out.report = point_order_condition(s, n, 2);
    out.report.kind = ConditionKind::OnQuadricExample;

    int rows = p, cols = (n % 2 == 0) ? p - 2 : p - 1;
    out.displayed_threshold = cols;
    if (rows > 0 && cols > 0) {
        out.displayed.assign(rows, std::vector<Rational>(cols));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) out.displayed[i][j] = s.r[p + 1 + i + j];
        out.displayed_satisfied = rational_rank(out.displayed) < cols;
    }
    return out;
}

std::vector<double> on_quadric_series(const std::vector<double>& a, double gamma, double alpha, int order) {
    const Poly<double> V = on_quadric_polynomial(a, alpha);
    const Poly<double> c0 = poly_taylor(V, 1.0 / (alpha - gamma));
    std::vector<double> c = c0;
    c.resize(std::max<std::size_t>(c.size(), order + 1), 0.0);
    if (!(c[0] > 0)) throw Error(ErrorCode::BranchPoint, "transformed polynomial not positive at u_gamma");
    std::vector<double> b(order + 1);
    b[0] = std::sqrt(c[0]);
    for (int k = 1; k <= order; ++k) {
        double acc = c[k];
        for (int j = 1; j < k; ++j) acc -= b[j] * b[k - j];
        b[k] = acc / (2 * b[0]);
    }
    return b;
}

double on_quadric_residual(const std::vector<double>& a, double gamma, double alpha, int n) {
    // smallest singular value of the rank test, entries made dimensionless by the local radius
    const int m = n / 2;
    const int rows = n % 2 == 0 ? m - 1 : m;
    const int cols = n % 2 == 0 ? m - 2 : m - 1;
    if (rows <= 0 || cols <= 0) return 1.0;
    const auto b = on_quadric_series(a, gamma, alpha, m + rows + 1);
    // scale by powers of the local radius so entries are comparable
    const double u = 1.0 / (alpha - gamma);
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = b[m + 1 + i - j] * std::pow(u, m + 1 + i - j) / b[0];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues()(cols - 1);
}

namespace {

template <class F>
std::array<double, 3> nelder_mead(F f, std::array<double, 2> x0, double step, int iterations) {
    std::array<std::array<double, 2>, 3> p{x0, {x0[0] + step, x0[1]}, {x0[0], x0[1] + step}};
    std::array<double, 3> v{f(p[0]), f(p[1]), f(p[2])};
    for (int it = 0; it < iterations; ++it) {
        std::array<int, 3> o{0, 1, 2};
        std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
        const auto best = p[o[0]], mid = p[o[1]], worst = p[o[2]];
        const std::array<double, 2> c{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        auto along = [&](double t) { return std::array<double, 2>{c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])}; };
        const auto r = along(-1);
        const double fr = f(r);
        if (fr < v[o[0]]) {
            const auto e = along(-2);
            const double fe = f(e);
            if (fe < fr) p[o[2]] = e, v[o[2]] = fe;
            else p[o[2]] = r, v[o[2]] = fr;
        } else if (fr < v[o[1]]) {
            p[o[2]] = r, v[o[2]] = fr;
        } else {
            const auto k = along(0.5);
            const double fk = f(k);
            if (fk < v[o[2]]) {
                p[o[2]] = k, v[o[2]] = fk;
            } else {
                for (int j : {o[1], o[2]}) {
                    p[j] = {(p[j][0] + best[0]) / 2, (p[j][1] + best[1]) / 2};
                    v[j] = f(p[j]);
                }
            }
        }
    }
    const int b = static_cast<int>(std::min_element(v.begin(), v.end()) - v.begin());
    return {p[b][0], p[b][1], v[b]};
}

}  // namespace

std::optional<OnQuadricInstance> find_on_quadric_instance(const std::vector<double>& a, int n, int grid, double tol) {
    if (a.size() != 3 || !(a[0] > a[1] && a[1] > a[2] && a[2] > 0))
        throw Error(ErrorCode::OutOfRange, "need three decreasing positive axes");
    // (s, t) in the unit square: alpha = a3 + s (a2 - a3), gamma = a3 + t (alpha - a3)
    auto param = [&](double s, double t) {
        const double alpha = a[2] + s * (a[1] - a[2]);
        return std::pair<double, double>{a[2] + t * (alpha - a[2]), alpha};
    };
    auto f = [&](const std::array<double, 2>& st) {
        if (!(st[0] > 0 && st[0] < 1 && st[1] > 0 && st[1] < 1)) return 1e30;
        const auto [g, al] = param(st[0], st[1]);
        return on_quadric_residual(a, g, al, n);
    };
    std::vector<std::vector<double>> r(grid + 1, std::vector<double>(grid + 1, 1e30));
    for (int i = 1; i < grid; ++i)
        for (int j = 1; j < grid; ++j) r[i][j] = f({double(i) / grid, double(j) / grid});
    std::optional<OnQuadricInstance> best;
    for (int i = 2; i < grid - 1; ++i)
        for (int j = 2; j < grid - 1; ++j) {
            bool local = true;
            for (int di = -1; di <= 1 && local; ++di)
                for (int dj = -1; dj <= 1 && local; ++dj)
                    if ((di || dj) && r[i + di][j + dj] < r[i][j]) local = false;
            if (!local) continue;
            // stay within two cells of the seed, away from the degenerate edges
            const double s0 = double(i) / grid, t0 = double(j) / grid, box = 2.0 / grid;
            auto local_f = [&](const std::array<double, 2>& st) {
                if (std::abs(st[0] - s0) > box || std::abs(st[1] - t0) > box) return 1e30;
                return f(st);
            };
            const auto m = nelder_mead(local_f, {s0, t0}, 0.5 / grid, 400);
            if (m[2] >= tol || (best && best->residual <= m[2])) continue;
            const auto [g, al] = param(m[0], m[1]);
            best = OnQuadricInstance{g, al, m[2]};
        }
    return best;
}

}  // namespace confocal
