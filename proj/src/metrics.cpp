#include "ppreg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ppreg/likelihood.hpp"
#include "ppreg/parallel.hpp"
#include "ppreg/registration.hpp"
#include "ppreg/simulate.hpp"

namespace ppreg {

double holdout_loglik(const ModelSpec& model, std::span<const EventSequence> test) {
    if (test.empty()) throw DataError("holdout_loglik needs a nonempty test set");
    double total = 0.0;
    for (const EventSequence& s : test) total -= neg_log_likelihood(model, s);
    return total / static_cast<double>(test.size());
}

namespace {

double linear_square_integral(double s0, double s1, double e0, double e1) {
    return (s1 - s0) * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0;
}

}  // namespace

double risk_over(std::span<const PiecewiseLinearWarp> warps) {
    if (warps.size() < 2) throw DataError("risk_over needs at least two warps");
    const double horizon = warps[0].horizon();
    for (const PiecewiseLinearWarp& w : warps) {
        if (w.horizon() != horizon) throw DataError("risk_over: warps must share a horizon");
    }
    std::vector<double> grid;
    for (const PiecewiseLinearWarp& w : warps) {
        grid.insert(grid.end(), w.landmarks().begin(), w.landmarks().end());
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const double inv_m = 1.0 / static_cast<double>(warps.size());
    std::vector<double> mean(grid.size(), 0.0);
    std::vector<std::vector<double>> values(warps.size(), std::vector<double>(grid.size()));
    for (std::size_t m = 0; m < warps.size(); ++m) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            values[m][k] = warps[m](grid[k]);
            mean[k] += values[m][k] * inv_m;
        }
    }
    double numerator = 0.0, denominator = 0.0;
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        numerator += linear_square_integral(grid[k], grid[k + 1], grid[k] - mean[k],
                                            grid[k + 1] - mean[k + 1]);
        for (std::size_t m = 0; m < warps.size(); ++m) {
            denominator += inv_m * linear_square_integral(grid[k], grid[k + 1],
                                                          values[m][k] - mean[k],
                                                          values[m][k + 1] - mean[k + 1]);
        }
    }
    const double scale = 1e-12 * horizon * horizon * horizon;
    if (numerator < scale) return 0.0;
    if (denominator < scale) return std::numeric_limits<double>::infinity();
    return numerator / denominator;
}

RiskUnderResult risk_under(const ModelSpec& fitted, const FitProcedure& fit,
                           std::span<const double> horizons, const BootstrapConfig& config,
                           int threads) {
    if (config.replicates < 2) throw DataError("risk_under needs at least two replicates");
    if (horizons.empty()) throw DataError("risk_under needs the dataset horizons");
    fitted.validate();

    const Rng root(config.seed);
    const std::size_t b_count = static_cast<std::size_t>(config.replicates);
    std::vector<std::vector<double>> params(b_count);
    parallel_for(b_count, threads, [&](std::size_t b) {
        try {
            Rng stream = root.child(config.freeze_seed ? 0 : b);
            std::vector<EventSequence> data;
            data.reserve(horizons.size());
            for (std::size_t m = 0; m < horizons.size(); ++m) {
                Rng seq_stream = stream.child(m);
                data.push_back(simulate_thinning(fitted, horizons[m], seq_stream,
                                                 "boot-" + std::to_string(m)));
            }
            params[b] = fit(data).learnable_parameters();
        } catch (const NumericError& err) {
            throw NumericError("bootstrap replicate " + std::to_string(b) + ": " + err.what());
        }
    });

    const std::size_t dim = params[0].size();
    RiskUnderResult res;
    res.per_parameter_variance.assign(dim, 0.0);
    std::vector<double> mean(dim, 0.0);
    for (const std::vector<double>& p : params) {
        if (p.size() != dim) throw DataError("risk_under: replicate fits disagree on parameter shape");
        for (std::size_t k = 0; k < dim; ++k) mean[k] += p[k] / static_cast<double>(b_count);
    }
    for (const std::vector<double>& p : params) {
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = p[k] - mean[k];
            res.per_parameter_variance[k] += d * d / static_cast<double>(b_count - 1);
        }
    }
    for (double v : res.per_parameter_variance) res.mean_variance += v / static_cast<double>(dim);
    return res;
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DataError("kendall_tau: length mismatch");
    if (x.size() < 2) throw DataError("kendall_tau needs at least two observations");
    const std::size_t n = x.size();
    double concordant = 0.0, discordant = 0.0, ties_x = 0.0, ties_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0) {
                ties_x += 1.0;
            } else if (dy == 0.0) {
                ties_y += 1.0;
            } else if (dx * dy > 0.0) {
                concordant += 1.0;
            } else {
                discordant += 1.0;
            }
        }
    }
    const double nx = concordant + discordant + ties_x;
    const double ny = concordant + discordant + ties_y;
    if (nx == 0.0 || ny == 0.0) {
        throw NumericError("kendall_tau undefined: an input is entirely tied");
    }
    return (concordant - discordant) / std::sqrt(nx * ny);
}

Matrix infectivity_matrix(const HawkesParams& params, double horizon) {
    params.validate();
    if (!(horizon >= 0.0)) throw DataError("infectivity_matrix needs a nonnegative horizon");
    const double decay = params.decay;
    const double factor =
        decay == 0.0 ? horizon : -std::expm1(-decay * horizon) / decay;
    Matrix out(params.dim(), params.dim());
    for (std::size_t c = 0; c < params.dim(); ++c) {
        for (std::size_t cp = 0; cp < params.dim(); ++cp) {
            out(c, cp) = params.excitation(c, cp) * factor;
        }
    }
    return out;
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DataError("pearson_correlation: bad input sizes");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson correlation undefined: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

DistortionErrorTable distortion_error_experiment(const DistortionErrorConfig& config,
                                                 int threads) {
    if (config.trials < 1) throw DataError("distortion_error_experiment needs trials >= 1");
    if (config.distortion_levels.empty()) throw DataError("distortion_levels must not be empty");
    config.truth.validate();
    const ModelSpec truth(config.truth);
    const HawkesStructure structure{static_cast<int>(config.truth.dim()), config.truth.decay};
    const Rng root(config.seed);

    DistortionErrorTable table;
    table.rows.resize(static_cast<std::size_t>(config.trials));
    parallel_for(static_cast<std::size_t>(config.trials), threads, [&](std::size_t trial) {
        Rng stream = root.child(trial);
        const double level =
            config.distortion_levels[trial % config.distortion_levels.size()];

        PiecewiseLinearWarp warp = PiecewiseLinearWarp::identity(config.horizon);
        if (level > 0.0) {
            // Scale a random cosine warp toward the identity until it hits the
            // requested distortion; scaling keeps monotonicity for factors <= 1.
            for (int attempt = 0; attempt < 200; ++attempt) {
                GeneratedWarp raw = generate_cosine_warp(config.warp_basis_count, config.horizon,
                                                         stream);
                const double raw_level = distortion(raw.warp);
                if (raw_level < level) continue;
                const double scale = level / raw_level;
                std::vector<double> values(raw.warp.landmark_count());
                for (std::size_t k = 0; k < values.size(); ++k) {
                    const double t = raw.warp.landmarks()[k];
                    values[k] = t + scale * (raw.warp.values()[k] - t);
                }
                warp = PiecewiseLinearWarp(
                    std::vector<double>(raw.warp.landmarks().begin(), raw.warp.landmarks().end()),
                    std::move(values));
                break;
            }
        }

        std::vector<EventSequence> observed;
        std::vector<PiecewiseLinearWarp> identities;
        for (int m = 0; m < config.sequences_per_trial; ++m) {
            Rng seq_stream = stream.child(static_cast<std::uint64_t>(m) + 1000);
            EventSequence seq = simulate_thinning(truth, config.horizon, seq_stream,
                                                  "trial-" + std::to_string(trial) + "-" +
                                                      std::to_string(m));
            observed.push_back(transform_sequence(warp, seq));
            identities.push_back(PiecewiseLinearWarp::identity(config.horizon));
        }
        const HawkesFit fit = fit_hawkes_mle(observed, identities, structure, config.mle);
        table.rows[trial] = {distortion(warp),
                             relative_estimation_error(ModelSpec(fit.params), truth)};
    });

    std::vector<double> xs, ys;
    for (const DistortionErrorRow& row : table.rows) {
        xs.push_back(row.distortion);
        ys.push_back(row.relative_error);
    }
    table.pearson = pearson_correlation(xs, ys);
    table.kendall = kendall_tau(xs, ys);
    return table;
}

}  // namespace ppreg
