#pragma once

#include <span>
#include <variant>
#include <vector>

#include "ppreg/mle.hpp"
#include "ppreg/warp_solver.hpp"

namespace ppreg {

enum class UpdateMode { parallel, sequential };

struct RegistrationConfig {
    int landmark_count = 20;
    double gamma = 0.01;
    int outer_iters = 7;
    MleConfig mle;
    WarpSolverConfig warp_solver;
    PoissonFitConfig poisson;
    UpdateMode update_mode = UpdateMode::parallel;
    std::uint64_t seed = 0;
    int threads = 1;
    double loss_tolerance = 1e-6;  // early exit on relative loss change
    /// Custom initial unwarps; empty means identity on each sequence's grid.
    std::vector<PiecewiseLinearWarp> initial_unwarps;
};

using ModelStructure = std::variant<HawkesStructure, PoissonStructure>;

struct RegistrationResult {
    ModelSpec model;
    std::vector<PiecewiseLinearWarp> unwarps;
    std::vector<PiecewiseLinearWarp> warps;  // exact inverses of the unwarps
    std::vector<double> loss_trace;          // initial loss plus one entry per outer iteration
    std::vector<double> iteration_seconds;
};

/// Joint objective: sum of warped negative log-likelihoods plus gamma times
/// the squared L2 distance between the mean unwarp and the identity,
/// integrated exactly (piecewise-quadratic integrand on the merged grid).
double total_loss(const ModelSpec& model, std::span<const PiecewiseLinearWarp> unwarps,
                  std::span<const EventSequence> seqs, double gamma);

/// Alternating optimization: fit the shared model on currently-unwarped data,
/// then update every warp by its convex subproblem, either all from the
/// previous iterate (parallel/Jacobi) or sweeping in order against live
/// partners (sequential/Gauss-Seidel). Deterministic for a fixed config.
RegistrationResult register_sequences(std::span<const EventSequence> seqs,
                                      const ModelStructure& structure,
                                      const RegistrationConfig& config);

/// ||theta_hat - theta||_2 / ||theta||_2 over the flattened learnable
/// parameters of two same-family models.
double relative_estimation_error(const ModelSpec& estimate, const ModelSpec& truth);

}  // namespace ppreg
