#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ppreg/mle.hpp"
#include "ppreg/models.hpp"
#include "ppreg/rng.hpp"
#include "ppreg/warp.hpp"

namespace ppreg {

/// Mean per-sequence log-likelihood (negated NLL) on an unwarped test set.
double holdout_loglik(const ModelSpec& model, std::span<const EventSequence> test);

/// Bias-to-variance ratio of a set of warps around their mean:
///   integral |s - Wbar(s)|^2 ds / mean_m integral |W_m(s) - Wbar(s)|^2 ds.
/// Zero when the mean warp is the identity; +infinity when the warps agree
/// on a common non-identity map (degenerate denominator).
double risk_over(std::span<const PiecewiseLinearWarp> warps);

struct BootstrapConfig {
    int replicates = 50;
    std::uint64_t seed = 0;
    /// Debug: reuse one stream for every replicate (identical datasets).
    bool freeze_seed = false;
};

using FitProcedure = std::function<ModelSpec(const std::vector<EventSequence>&)>;

struct RiskUnderResult {
    double mean_variance = 0.0;
    std::vector<double> per_parameter_variance;
};

/// Parametric bootstrap: simulate `replicates` unwarped datasets from the
/// fitted model (given per-sequence horizons), refit each with the supplied
/// procedure, and report the variance of the flattened parameter vector.
RiskUnderResult risk_under(const ModelSpec& fitted, const FitProcedure& fit,
                           std::span<const double> horizons, const BootstrapConfig& config,
                           int threads = 1);

/// Kendall's tau-b (tie-corrected) over all pairs.
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// psi(c, c') = excitation(c, c') * (1 - exp(-decay T)) / decay.
Matrix infectivity_matrix(const HawkesParams& params, double horizon);

struct DistortionErrorConfig {
    int trials = 100;
    int sequences_per_trial = 40;
    double horizon = 100.0;
    std::vector<double> distortion_levels;  // cycled across trials
    HawkesParams truth;
    int warp_basis_count = 10;
    std::uint64_t seed = 0;
    MleConfig mle;
};

struct DistortionErrorRow {
    double distortion = 0.0;
    double relative_error = 0.0;
};

struct DistortionErrorTable {
    std::vector<DistortionErrorRow> rows;
    double pearson = 0.0;
    double kendall = 0.0;
};

/// Per trial: simulate sequences from the fixed truth, warp them all with one
/// generated warp scaled to the trial's distortion level, fit by plain MLE on
/// the warped data, and record (distortion, relative estimation error).
DistortionErrorTable distortion_error_experiment(const DistortionErrorConfig& config,
                                                 int threads = 1);

double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace ppreg
