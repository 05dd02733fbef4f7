#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ppreg/likelihood.hpp"
#include "ppreg/models.hpp"
#include "ppreg/warp.hpp"

namespace ppreg {

/// Fixed structure of a Hawkes fit; only background and excitation are learned.
struct HawkesStructure {
    int type_count = 1;
    double decay = 1.0;
};

struct MleConfig {
    int max_iters = 15;
    double tolerance = 1e-6;  // relative objective change between EM iterations
    /// Use the exact shifted excitation integral in the M-step denominators
    /// instead of the time-shifted approximation.
    bool exact_excitation = false;
};

/// EM responsibilities of one sequence: background[i] is the probability that
/// event i is a background event, trigger[i][j] that it was triggered by
/// event j < i. Each event's responsibilities sum to one.
struct EmResponsibilities {
    std::vector<double> background;
    std::vector<std::vector<double>> trigger;
};

EmResponsibilities em_responsibilities(const HawkesParams& params, const EventSequence& unwarped_seq);

/// Exact integral of exp(-decay * U(s)) ds over [lower, upper] on the
/// observed timeline; decay 0 degenerates to upper - lower.
double exp_compensator_integral(const PiecewiseLinearWarp& unwarp, double decay,
                                double lower, double upper);

/// Exact integral of exp(-decay * (U(s) - U(from))) ds over [from, T].
double shifted_exp_compensator_integral(const PiecewiseLinearWarp& unwarp, double decay, double from);

/// Closed-form M-step. Per-sequence horizons enter the background denominator;
/// a trigger type that never occurs leaves its excitation column at zero.
HawkesParams em_update(std::span<const EmResponsibilities> resps,
                       std::span<const EventSequence> seqs,
                       std::span<const PiecewiseLinearWarp> unwarps,
                       const HawkesStructure& structure, bool exact_excitation = false);

/// The fitter's starting point: background from raw type counts over the
/// total observation time, uniform small excitation.
HawkesParams hawkes_em_initialization(std::span<const EventSequence> seqs,
                                      const HawkesStructure& structure);

struct HawkesFit {
    HawkesParams params;
    std::vector<double> nll_trace;  // objective before the first and after every EM iteration
};

/// EM fit of the Hawkes parameters given fixed unwarping functions. The trace
/// records the objective the M-step minimizes (its compensator follows the
/// same excitation-integral convention as the denominators), so it is
/// non-increasing by construction; with identity unwarps it is the exact
/// negative log-likelihood.
HawkesFit fit_hawkes_mle(std::span<const EventSequence> seqs,
                         std::span<const PiecewiseLinearWarp> unwarps,
                         const HawkesStructure& structure, const MleConfig& config = {},
                         const std::optional<HawkesParams>& init = std::nullopt,
                         int threads = 1);

/// Bump onsets/decays are fixed; only amplitudes are learned.
struct PoissonStructure {
    std::vector<PoissonBump> bumps;  // input amplitudes are ignored
    double replicate_period = 0.0;
    int replicate_count = 1;
};

struct PoissonFitConfig {
    int max_iters = 10000;
    /// Relative reduction of the projected-gradient norm at which to stop.
    double gradient_tolerance = 1e-13;
};

/// Concave amplitude MLE by projected gradient ascent over alpha >= 0.
PoissonBumpModel fit_poisson_mle(std::span<const EventSequence> seqs,
                                 std::span<const PiecewiseLinearWarp> unwarps,
                                 const PoissonStructure& structure,
                                 const PoissonFitConfig& config = {});

}  // namespace ppreg
