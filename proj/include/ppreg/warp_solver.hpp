#pragma once

#include <span>
#include <vector>

#include "ppreg/likelihood.hpp"
#include "ppreg/models.hpp"
#include "ppreg/warp.hpp"

namespace ppreg {

/// One event's frozen Jensen terms: weights over the exponential components
/// of its intensity at the expansion unwarp (background/trigger terms for
/// Hawkes, active bumps for Poisson). q sums to one per event.
struct SurrogateEventTerm {
    double observed_time = 0.0;
    std::size_t segment = 0;
    std::vector<double> q;
    std::vector<double> beta;
    double weight = 0.0;  // sum_j q_j beta_j
};

/// Frozen coefficients defining one convex warp subproblem instance. p[l] is
/// the compensator mass of segment l at the expansion unwarp; the dropped
/// additive constant of the bound is not stored.
struct SurrogateCoefficients {
    std::vector<double> landmarks;
    std::vector<double> p;
    std::vector<SurrogateEventTerm> events;
};

SurrogateCoefficients surrogate_coefficients(const ModelSpec& model,
                                             const PiecewiseLinearWarp& unwarp,
                                             const EventSequence& seq);

/// Quadratic pull of the other sequences' warps toward collective
/// unbiasedness: abar = sum_{m' != m} a^{m'} / M - 1, bbar likewise without
/// the -1. Empty vectors are valid only with gamma = 0.
struct RegularizerTerms {
    std::vector<double> abar;
    std::vector<double> bbar;
    double gamma = 0.0;
    double sequence_count = 1.0;
};

RegularizerTerms regularizer_terms(std::span<const PiecewiseLinearWarp> unwarps,
                                   std::size_t exclude, double gamma);

/// Knot increments d_l = v_{l+1} - v_l of an unwarp; positive, summing to T.
std::vector<double> knot_increments(const PiecewiseLinearWarp& unwarp);

PiecewiseLinearWarp warp_from_increments(std::span<const double> landmarks,
                                         std::span<const double> increments);

/// The convex surrogate as a function of the knot increments:
///   sum_l p_l / a_l + sum_i sum_j q_ij beta_j U_d(t_i)
///   + gamma ||a/M + abar||^2 + gamma ||b/M + bbar||^2.
double surrogate_objective(const SurrogateCoefficients& coeffs, const RegularizerTerms& reg,
                           std::span<const double> increments);

std::vector<double> surrogate_gradient(const SurrogateCoefficients& coeffs,
                                       const RegularizerTerms& reg,
                                       std::span<const double> increments);

struct WarpSolverConfig {
    int inner_rounds = 5;  // coefficient refreshes
    int pg_iters = 200;    // projected-gradient steps per round
    double slope_floor_scale = 1e-6;  // knot-increment floor = scale * T / L
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double tolerance = 1e-8;  // relative convergence tolerance
};

/// The true per-sequence objective of the subproblem (warped negative
/// log-likelihood plus the quadratic regularizer).
double warp_subproblem_objective(const ModelSpec& model, const PiecewiseLinearWarp& unwarp,
                                 const RegularizerTerms& reg, const EventSequence& seq);

/// Alternate coefficient freezes with projected-gradient minimization of the
/// surrogate over {d >= floor, sum d = T}. Returns the iterate with the best
/// true objective seen (the input included), so the subproblem value never
/// increases. The returned unwarp satisfies the boundary, continuity and
/// positivity constraints structurally.
PiecewiseLinearWarp solve_warp_subproblem(const ModelSpec& model,
                                          const PiecewiseLinearWarp& prev_unwarp,
                                          const RegularizerTerms& reg, const EventSequence& seq,
                                          const WarpSolverConfig& config = {});

}  // namespace ppreg
