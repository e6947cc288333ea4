#pragma once

#include <cstddef>
#include <vector>

namespace confocal {

// Coefficients in ascending order: p[k] multiplies x^k.
template <class T>
using Poly = std::vector<T>;

template <class T>
void poly_trim(Poly<T>& p) {
    while (p.size() > 1 && p.back() == T(0)) p.pop_back();
}

template <class T>
Poly<T> poly_mul(const Poly<T>& p, const Poly<T>& q) {
    if (p.empty() || q.empty()) return {};
    Poly<T> r(p.size() + q.size() - 1, T(0));
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < q.size(); ++j) r[i + j] += p[i] * q[j];
    return r;
}

template <class T>
Poly<T> poly_add(const Poly<T>& p, const Poly<T>& q) {
    Poly<T> r(std::max(p.size(), q.size()), T(0));
    for (std::size_t i = 0; i < p.size(); ++i) r[i] += p[i];
    for (std::size_t i = 0; i < q.size(); ++i) r[i] += q[i];
    return r;
}

template <class T>
Poly<T> poly_scale(Poly<T> p, const T& c) {
    for (auto& v : p) v *= c;
    return p;
}

template <class T, class X>
X poly_eval(const Poly<T>& p, const X& x) {
    X r(0);
    for (std::size_t k = p.size(); k-- > 0;) r = r * x + X(p[k]);
    return r;
}

template <class T>
Poly<T> poly_derivative(const Poly<T>& p) {
    if (p.size() <= 1) return {T(0)};
    Poly<T> r(p.size() - 1);
    for (std::size_t k = 1; k < p.size(); ++k) r[k - 1] = p[k] * T(static_cast<long>(k));
    return r;
}

// Coefficients of t -> p(x0 + t).
template <class T>
Poly<T> poly_taylor(const Poly<T>& p, const T& x0) {
    Poly<T> r = p;
    const std::size_t n = r.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        for (std::size_t k = n - 1; k > i; --k) r[k - 1] += x0 * r[k];
    return r;
}

// prod_i (r_i - x)
template <class T>
Poly<T> poly_from_factors(const std::vector<T>& roots) {
    Poly<T> p{T(1)};
    for (const auto& r : roots) p = poly_mul(p, Poly<T>{r, T(-1)});
    return p;
}

// Real roots of a real polynomial, ascending, via the companion matrix and Newton polish.
std::vector<double> real_roots(const Poly<double>& p, double imag_tol = 1e-7);

}  // namespace confocal
