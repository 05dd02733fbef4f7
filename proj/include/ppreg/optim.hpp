#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ppreg {

struct PgOptions {
    int max_iters = 200;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 60;
    double grad_tolerance = 0.0;   // absolute, on ||P(x - g) - x||_inf; 0 disables
    double value_tolerance = 0.0;  // relative objective change; 0 disables
};

struct PgResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
};

/// Projected gradient descent with Armijo backtracking and Barzilai-Borwein
/// step seeds. The projection must map onto a closed convex set. An accepted
/// step can never increase the objective; if one does, the gradient is wrong
/// and a logic_error is thrown.
inline PgResult projected_gradient_minimize(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::function<std::vector<double>(const std::vector<double>&)>& gradient,
    const std::function<void(std::vector<double>&)>& project,
    std::vector<double> x0, const PgOptions& opts) {
    auto inf_norm = [](const std::vector<double>& v) {
        double n = 0.0;
        for (double a : v) n = std::max(n, std::abs(a));
        return n;
    };

    project(x0);
    PgResult res;
    res.x = std::move(x0);
    res.value = objective(res.x);

    std::vector<double> g = gradient(res.x);
    std::vector<double> prev_x, prev_g;
    double step = 1.0;
    {
        const double gn = inf_norm(g);
        const double xn = std::max(1.0, inf_norm(res.x));
        if (gn > 0.0) step = xn / gn;
    }

    for (int it = 0; it < opts.max_iters; ++it) {
        res.iterations = it + 1;

        // Projected-gradient stationarity measure.
        std::vector<double> probe = res.x;
        for (std::size_t k = 0; k < probe.size(); ++k) probe[k] -= g[k];
        project(probe);
        double stat = 0.0;
        for (std::size_t k = 0; k < probe.size(); ++k) stat = std::max(stat, std::abs(probe[k] - res.x[k]));
        if (opts.grad_tolerance > 0.0 && stat <= opts.grad_tolerance) break;

        if (!prev_x.empty()) {
            double sy = 0.0, yy = 0.0;
            for (std::size_t k = 0; k < g.size(); ++k) {
                const double s = res.x[k] - prev_x[k];
                const double y = g[k] - prev_g[k];
                sy += s * y;
                yy += y * y;
            }
            if (sy > 0.0 && yy > 0.0) step = std::clamp(sy / yy, 1e-12, 1e12);
        }

        std::vector<double> cand(res.x.size());
        double f_cand = 0.0, decrease = 0.0;
        double eta = step;
        bool accepted = false;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            for (std::size_t k = 0; k < cand.size(); ++k) cand[k] = res.x[k] - eta * g[k];
            project(cand);
            decrease = 0.0;
            for (std::size_t k = 0; k < cand.size(); ++k) decrease += g[k] * (cand[k] - res.x[k]);
            if (decrease >= 0.0) break;  // stationary in this direction
            f_cand = objective(cand);
            if (std::isfinite(f_cand) && f_cand <= res.value + opts.armijo_c * decrease) {
                accepted = true;
                break;
            }
            eta *= opts.backtrack;
        }
        if (!accepted) break;
        if (f_cand > res.value + 1e-12 * (1.0 + std::abs(res.value))) {
            throw std::logic_error("projected-gradient step increased the objective; gradient is inconsistent");
        }

        const double change = std::abs(res.value - f_cand);
        prev_x = std::move(res.x);
        prev_g = std::move(g);
        res.x = std::move(cand);
        res.value = f_cand;
        g = gradient(res.x);
        if (opts.value_tolerance > 0.0 && change <= opts.value_tolerance * (1.0 + std::abs(res.value))) {
            break;
        }
    }
    return res;
}

/// Euclidean projection onto {x : x >= floor elementwise, sum(x) = total}.
inline void project_floored_simplex(std::vector<double>& x, double floor_value, double total) {
    const std::size_t n = x.size();
    const double budget = total - floor_value * static_cast<double>(n);
    if (budget <= 0.0) throw std::invalid_argument("floored simplex is empty");
    std::vector<double> shifted(n);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = x[i] - floor_value;
    // Duchi et al. sort-based simplex projection.
    std::vector<double> u = shifted;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    std::size_t rho = 0;
    double running = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        running += u[i];
        if (u[i] - (running - budget) / static_cast<double>(i + 1) > 0.0) {
            rho = i;
            css = running;
        }
    }
    theta = (css - budget) / static_cast<double>(rho + 1);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::max(shifted[i] - theta, 0.0) + floor_value;
    }
}

}  // namespace ppreg
