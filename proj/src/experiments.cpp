#include "ppreg/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "ppreg/metrics.hpp"

namespace ppreg {

double median(std::vector<double> values) {
    if (values.empty()) throw DataError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

HawkesParams default_hawkes_truth(int type_count, std::uint64_t seed) {
    if (type_count < 1) throw DataError("type_count must be >= 1");
    HawkesParams truth;
    truth.decay = 1.0;
    if (type_count == 1) {
        truth.background = {0.5};
        truth.excitation = Matrix(1, 1, 0.4);
        return truth;
    }
    Rng rng(seed);
    const std::size_t c = static_cast<std::size_t>(type_count);
    truth.background.resize(c);
    for (double& b : truth.background) b = rng.uniform(0.05, 0.15);
    truth.excitation = Matrix(c, c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            if (i == j || rng.uniform() < 0.5) truth.excitation(i, j) = rng.uniform(0.1, 1.0);
        }
    }
    const double rho = truth.branching_spectral_radius();
    for (double& v : truth.excitation.data()) v *= 0.8 / rho;
    return truth;
}

PoissonBumpModel default_poisson_truth(double horizon, std::uint64_t seed) {
    Rng rng(seed);
    PoissonBumpModel truth;
    for (int j = 0; j < 5; ++j) {
        truth.bumps.push_back({rng.uniform(0.0, horizon), 1.0, 1.0});
    }
    std::sort(truth.bumps.begin(), truth.bumps.end(),
              [](const PoissonBump& a, const PoissonBump& b) { return a.onset < b.onset; });
    return truth;
}

namespace {

ModelStructure stitched_structure(const ModelStructure& structure, int k, double horizon) {
    if (std::holds_alternative<HawkesStructure>(structure)) return structure;
    PoissonStructure ps = std::get<PoissonStructure>(structure);
    ps.replicate_period = horizon;
    ps.replicate_count = k + 1;
    return ps;
}

// Strip block replication so a stitched fit can be scored on single-window data.
ModelSpec base_window_model(const ModelSpec& model) {
    if (model.is_hawkes()) return model;
    PoissonBumpModel m = model.poisson();
    m.replicate_period = 0.0;
    m.replicate_count = 1;
    return ModelSpec(m);
}

ModelSpec plain_mle(std::span<const EventSequence> seqs, const ModelStructure& structure,
                    const RegistrationConfig& config) {
    std::vector<PiecewiseLinearWarp> identities;
    identities.reserve(seqs.size());
    for (const EventSequence& s : seqs) {
        identities.push_back(PiecewiseLinearWarp::identity(s.horizon()));
    }
    if (std::holds_alternative<HawkesStructure>(structure)) {
        return ModelSpec(fit_hawkes_mle(seqs, identities, std::get<HawkesStructure>(structure),
                                        config.mle, std::nullopt, config.threads)
                             .params);
    }
    return ModelSpec(
        fit_poisson_mle(seqs, identities, std::get<PoissonStructure>(structure), config.poisson));
}

}  // namespace

SyntheticExperimentResult experiment_synthetic(const SyntheticExperimentConfig& config) {
    SyntheticExperimentResult result;
    RegistrationConfig reg = config.registration;
    reg.threads = config.threads;

    for (int trial = 0; trial < config.seeds; ++trial) {
        const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(trial);
        SyntheticDatasetSpec spec;
        spec.model = config.truth;
        spec.sequence_count = config.total_sequences;
        spec.horizon = config.horizon;
        spec.warp_basis_count = config.warp_basis_count;
        spec.seed = seed;
        spec.identity_warps = config.identity_warps;
        const SyntheticDataset data = make_synthetic_dataset(spec);

        for (int n : config.train_sizes) {
            if (n < 1 || static_cast<std::size_t>(n) > data.train.size()) {
                throw DataError("train size " + std::to_string(n) + " exceeds the training pool");
            }
            std::vector<EventSequence> observed, unwarped_truth;
            std::vector<TrainSequence> subset;
            for (int m = 0; m < n; ++m) {
                const TrainSequence& item = data.train[static_cast<std::size_t>(m)];
                observed.push_back(item.observed);
                unwarped_truth.push_back(
                    transform_sequence(item.true_warp.inverse(), item.observed));
                subset.push_back(item);
            }

            auto record = [&](const std::string& method, const ModelSpec& model) {
                const ModelSpec scored = base_window_model(model);
                result.rows.push_back({method, n, seed,
                                       relative_estimation_error(scored, config.truth),
                                       holdout_loglik(scored, data.test)});
            };

            record("unwarped-mle", plain_mle(unwarped_truth, config.structure, reg));
            record("warped-mle", plain_mle(observed, config.structure, reg));
            record("rpp", register_sequences(observed, config.structure, reg).model);

            for (int k : config.stitch_counts) {
                Rng stitch_rng = Rng(seed).child(0xabcd + static_cast<std::uint64_t>(k));
                const std::vector<TrainSequence> stitched = stitch_randomly(subset, k, stitch_rng);
                std::vector<EventSequence> stitched_obs;
                for (const TrainSequence& item : stitched) stitched_obs.push_back(item.observed);
                const ModelStructure structure_k =
                    stitched_structure(config.structure, k, config.horizon);
                record("rpp-stitch" + std::to_string(k),
                       register_sequences(stitched_obs, structure_k, reg).model);
            }
        }
    }
    return result;
}

namespace {

SweepResult sweep_impl(const SweepConfig& config, const std::vector<double>& grid,
                       bool is_gamma) {
    SweepResult out;
    for (double value : grid) {
        std::vector<double> errors;
        for (int trial = 0; trial < config.seeds; ++trial) {
            const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(trial);
            SyntheticDatasetSpec spec;
            spec.model = config.truth;
            spec.sequence_count = 2 * config.train_size;
            spec.horizon = config.horizon;
            spec.warp_basis_count = config.warp_basis_count;
            spec.seed = seed;
            const SyntheticDataset data = make_synthetic_dataset(spec);

            std::vector<EventSequence> observed;
            for (const TrainSequence& item : data.train) observed.push_back(item.observed);

            RegistrationConfig reg = config.registration;
            reg.threads = config.threads;
            if (is_gamma) {
                reg.gamma = value;
            } else {
                reg.landmark_count = static_cast<int>(value);
            }
            const RegistrationResult fit = register_sequences(observed, config.structure, reg);
            errors.push_back(relative_estimation_error(fit.model, config.truth));
        }
        out.points.push_back({value, median(errors)});
    }
    return out;
}

}  // namespace

SweepResult sweep_gamma(const SweepConfig& config, std::span<const double> gammas) {
    return sweep_impl(config, std::vector<double>(gammas.begin(), gammas.end()), true);
}

SweepResult sweep_landmarks(const SweepConfig& config, std::span<const int> landmark_counts) {
    std::vector<double> grid;
    for (int l : landmark_counts) grid.push_back(static_cast<double>(l));
    return sweep_impl(config, grid, false);
}

}  // namespace ppreg
