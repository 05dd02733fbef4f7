// Test-only numerical oracles, independent of the library's closed forms.
#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace oracles {

using Fn = std::function<double(double)>;

namespace detail {
inline double simpson_rec(const Fn& f, double a, double b, double eps, double whole, double fa,
                          double fb, double fm, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return simpson_rec(f, a, m, eps / 2.0, left, fa, fm, flm, depth - 1) +
           simpson_rec(f, m, b, eps / 2.0, right, fm, fb, frm, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature of f over [a, b].
inline double adaptive_simpson(const Fn& f, double a, double b, double eps = 1e-12,
                               int depth = 48) {
    if (!(b > a)) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_rec(f, a, b, eps, whole, fa, fb, fm, depth);
}

/// Quadrature with explicit breakpoints for integrands with kinks.
inline double adaptive_simpson_split(const Fn& f, std::vector<double> breakpoints,
                                     double eps = 1e-12) {
    std::sort(breakpoints.begin(), breakpoints.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        total += adaptive_simpson(f, breakpoints[i], breakpoints[i + 1],
                                  eps / static_cast<double>(breakpoints.size()));
    }
    return total;
}

inline double relative_gap(double actual, double expected) {
    return std::abs(actual - expected) / std::max(1.0, std::abs(expected));
}

}  // namespace oracles
