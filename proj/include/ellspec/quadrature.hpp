#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "ellspec/errors.hpp"

namespace ellspec {
namespace detail {

/// Gauss-Legendre nodes/weights on [-1,1], computed once per order by
/// Newton iteration on the Legendre recurrence.
inline const std::vector<std::pair<double, double>>& gauss_legendre_rule(int order) {
    thread_local std::vector<std::vector<std::pair<double, double>>> cache;
    if (order >= static_cast<int>(cache.size())) cache.resize(order + 1);
    auto& rule = cache[order];
    if (!rule.empty()) return rule;
    rule.reserve(order);
    const double pi = 3.141592653589793238462643383279502884;
    for (int i = 0; i < order; ++i) {
        double x = std::cos(pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.emplace_back(x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    return rule;
}

template <typename F>
double gauss_legendre(F&& f, double a, double b, int order) {
    const auto& rule = gauss_legendre_rule(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double acc = 0.0;
    for (const auto& [x, w] : rule) acc += w * f(mid + half * x);
    return half * acc;
}

template <typename F>
double adaptive_gl_rec(F& f, double a, double b, double tol, double whole, int depth) {
    const double mid = 0.5 * (a + b);
    const double left = gauss_legendre(f, a, mid, 15);
    const double right = gauss_legendre(f, mid, b, 15);
    const double err = std::abs(left + right - whole);
    if (err <= tol || depth >= 52) {
        if (depth >= 52 && err > tol)
            throw NumericalError("adaptive quadrature: recursion depth exhausted", err);
        return left + right;
    }
    return adaptive_gl_rec(f, a, mid, 0.5 * tol, left, depth + 1) +
           adaptive_gl_rec(f, mid, b, 0.5 * tol, right, depth + 1);
}

}  // namespace detail

/// Adaptive Gauss-Legendre integration of f over [a, b] to absolute
/// tolerance abs_tol.
template <typename F>
double integrate(F&& f, double a, double b, double abs_tol) {
    if (a == b) return 0.0;
    return detail::adaptive_gl_rec(f, a, b, abs_tol, detail::gauss_legendre(f, a, b, 15), 0);
}

}  // namespace ellspec
