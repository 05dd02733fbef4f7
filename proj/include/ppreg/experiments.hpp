#pragma once

#include <string>
#include <vector>

#include "ppreg/registration.hpp"
#include "ppreg/simulate.hpp"

namespace ppreg {

/// Documented default ground truths for the synthetic studies. The 1-type
/// Hawkes model is (background 0.5, excitation 0.4, decay 1); larger type
/// counts get a seeded random sparse excitation scaled to branching spectral
/// radius 0.8. These defaults are this harness's choice, not published values.
HawkesParams default_hawkes_truth(int type_count, std::uint64_t seed = 7);

/// Five unit-amplitude, unit-decay bumps with onsets drawn uniformly on the
/// window.
PoissonBumpModel default_poisson_truth(double horizon, std::uint64_t seed = 7);

struct SyntheticExperimentConfig {
    ModelSpec truth;
    ModelStructure structure;
    std::vector<int> train_sizes{10, 20, 40};
    std::vector<int> stitch_counts{1};
    int seeds = 5;
    std::uint64_t base_seed = 0;
    double horizon = 100.0;
    int total_sequences = 200;
    int warp_basis_count = 10;
    bool identity_warps = false;  // control runs: no warping applied
    RegistrationConfig registration;
    int threads = 1;
};

struct SyntheticExperimentRow {
    std::string method;  // unwarped-mle | warped-mle | rpp | rpp-stitch<K>
    int train_size = 0;
    std::uint64_t seed = 0;
    double relative_error = 0.0;
    double holdout_loglik = 0.0;
};

struct SyntheticExperimentResult {
    std::vector<SyntheticExperimentRow> rows;
};

/// The synthetic comparison protocol: per seed, simulate a dataset, warp the
/// training half, then compare plain MLE on warped data against registration
/// and registration-after-stitching at each training size.
SyntheticExperimentResult experiment_synthetic(const SyntheticExperimentConfig& config);

struct SweepConfig {
    ModelSpec truth;
    ModelStructure structure;
    int train_size = 40;
    int seeds = 3;
    std::uint64_t base_seed = 0;
    double horizon = 100.0;
    int total_sequences = 100;
    int warp_basis_count = 10;
    RegistrationConfig registration;
    int threads = 1;
};

struct SweepPoint {
    double value = 0.0;  // gamma or landmark count
    double median_relative_error = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
};

SweepResult sweep_gamma(const SweepConfig& config, std::span<const double> gammas);

SweepResult sweep_landmarks(const SweepConfig& config, std::span<const int> landmark_counts);

double median(std::vector<double> values);

}  // namespace ppreg
