#include "ppreg/registration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ppreg/parallel.hpp"

namespace ppreg {

namespace {

double linear_square_integral(double s0, double s1, double e0, double e1) {
    return (s1 - s0) * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0;
}

// Integral of |mean_m U_m(s) - s|^2 ds. Heterogeneous horizons are handled on
// the relative timeline, scaled by the cubed mean horizon; for a common
// horizon this is the plain integral over [0, T].
double unbiasedness_integral(std::span<const PiecewiseLinearWarp> unwarps) {
    std::vector<double> grid;
    double horizon_mean = 0.0;
    for (const PiecewiseLinearWarp& u : unwarps) {
        horizon_mean += u.horizon() / static_cast<double>(unwarps.size());
        for (double t : u.landmarks()) grid.push_back(t / u.horizon());
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<double> mean(grid.size(), 0.0);
    for (const PiecewiseLinearWarp& u : unwarps) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            mean[k] += u(grid[k] * u.horizon()) / u.horizon() / static_cast<double>(unwarps.size());
        }
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        total += linear_square_integral(grid[k], grid[k + 1], mean[k] - grid[k],
                                        mean[k + 1] - grid[k + 1]);
    }
    return total * horizon_mean * horizon_mean * horizon_mean;
}

ModelSpec fit_model(std::span<const EventSequence> seqs,
                    std::span<const PiecewiseLinearWarp> unwarps, const ModelStructure& structure,
                    const RegistrationConfig& config, const ModelSpec* warm_start) {
    if (std::holds_alternative<HawkesStructure>(structure)) {
        const HawkesStructure& hs = std::get<HawkesStructure>(structure);
        std::optional<HawkesParams> init;
        if (warm_start != nullptr) init = warm_start->hawkes();
        return ModelSpec(
            fit_hawkes_mle(seqs, unwarps, hs, config.mle, init, config.threads).params);
    }
    const PoissonStructure& ps = std::get<PoissonStructure>(structure);
    return ModelSpec(fit_poisson_mle(seqs, unwarps, ps, config.poisson));
}

ModelSpec initial_model(std::span<const EventSequence> seqs, const ModelStructure& structure) {
    if (std::holds_alternative<HawkesStructure>(structure)) {
        return ModelSpec(hawkes_em_initialization(seqs, std::get<HawkesStructure>(structure)));
    }
    const PoissonStructure& ps = std::get<PoissonStructure>(structure);
    double horizon_total = 0.0;
    std::size_t events = 0;
    for (const EventSequence& s : seqs) {
        horizon_total += s.horizon();
        events += s.size();
    }
    PoissonBumpModel model;
    model.bumps = ps.bumps;
    model.replicate_period = ps.replicate_period;
    model.replicate_count = ps.replicate_count;
    const double amp = std::max(1e-12, static_cast<double>(events) /
                                           (static_cast<double>(ps.bumps.size()) * horizon_total));
    for (PoissonBump& b : model.bumps) b.amplitude = amp;
    return ModelSpec(model);
}

}  // namespace

double total_loss(const ModelSpec& model, std::span<const PiecewiseLinearWarp> unwarps,
                  std::span<const EventSequence> seqs, double gamma) {
    if (unwarps.size() != seqs.size() || seqs.empty()) {
        throw DataError("total_loss needs one unwarp per sequence");
    }
    double loss = 0.0;
    for (std::size_t m = 0; m < seqs.size(); ++m) {
        loss += warped_neg_log_likelihood(model, unwarps[m], seqs[m]);
    }
    if (gamma > 0.0) loss += gamma * unbiasedness_integral(unwarps);
    return loss;
}

RegistrationResult register_sequences(std::span<const EventSequence> seqs,
                                      const ModelStructure& structure,
                                      const RegistrationConfig& config) {
    if (seqs.empty()) throw DataError("register_sequences needs a nonempty dataset");
    if (config.landmark_count < 2) throw DataError("landmark_count must be >= 2");
    if (config.outer_iters < 1) throw DataError("outer_iters must be >= 1");
    if (!(config.gamma >= 0.0)) throw DataError("gamma must be nonnegative");

    RegistrationResult result;
    if (!config.initial_unwarps.empty()) {
        if (config.initial_unwarps.size() != seqs.size()) {
            throw DataError("initial_unwarps must match the sequence count");
        }
        result.unwarps = config.initial_unwarps;
        for (std::size_t m = 0; m < seqs.size(); ++m) {
            if (result.unwarps[m].horizon() != seqs[m].horizon()) {
                throw DataError("initial unwarp horizon mismatch for sequence '" + seqs[m].id() + "'");
            }
        }
    } else {
        for (const EventSequence& s : seqs) {
            result.unwarps.push_back(PiecewiseLinearWarp::identity(
                s.horizon(), static_cast<std::size_t>(config.landmark_count)));
        }
    }

    result.model = initial_model(seqs, structure);
    result.loss_trace.push_back(total_loss(result.model, result.unwarps, seqs, config.gamma));

    for (int outer = 0; outer < config.outer_iters; ++outer) {
        const auto started = std::chrono::steady_clock::now();
        try {
            const ModelSpec* warm = outer == 0 ? nullptr : &result.model;
            result.model = fit_model(seqs, result.unwarps, structure, config, warm);

            if (config.update_mode == UpdateMode::parallel) {
                const std::vector<PiecewiseLinearWarp> snapshot = result.unwarps;
                parallel_for(seqs.size(), config.threads, [&](std::size_t m) {
                    const RegularizerTerms reg = regularizer_terms(snapshot, m, config.gamma);
                    result.unwarps[m] = solve_warp_subproblem(result.model, snapshot[m], reg,
                                                              seqs[m], config.warp_solver);
                });
            } else {
                for (std::size_t m = 0; m < seqs.size(); ++m) {
                    const RegularizerTerms reg = regularizer_terms(result.unwarps, m, config.gamma);
                    result.unwarps[m] = solve_warp_subproblem(result.model, result.unwarps[m], reg,
                                                              seqs[m], config.warp_solver);
                }
            }
        } catch (const NumericError& err) {
            throw NumericError("outer iteration " + std::to_string(outer + 1) + ": " + err.what());
        }

        result.loss_trace.push_back(total_loss(result.model, result.unwarps, seqs, config.gamma));
        result.iteration_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());

        const double prev = result.loss_trace[result.loss_trace.size() - 2];
        const double curr = result.loss_trace.back();
        if (std::abs(prev - curr) <= config.loss_tolerance * std::abs(prev)) break;
    }

    result.warps.reserve(result.unwarps.size());
    for (const PiecewiseLinearWarp& u : result.unwarps) result.warps.push_back(u.inverse());
    return result;
}

double relative_estimation_error(const ModelSpec& estimate, const ModelSpec& truth) {
    if (estimate.is_hawkes() != truth.is_hawkes()) {
        throw DataError("relative_estimation_error: model families differ");
    }
    const std::vector<double> est = estimate.learnable_parameters();
    const std::vector<double> ref = truth.learnable_parameters();
    if (est.size() != ref.size()) {
        throw DataError("relative_estimation_error: parameter shapes differ");
    }
    double diff = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i) {
        diff += (est[i] - ref[i]) * (est[i] - ref[i]);
        norm += ref[i] * ref[i];
    }
    if (!(norm > 0.0)) throw DataError("relative_estimation_error: ground truth has zero norm");
    return std::sqrt(diff / norm);
}

}  // namespace ppreg
