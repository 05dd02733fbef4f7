#pragma once

#include <span>
#include <string>
#include <vector>

#include "ppreg/models.hpp"
#include "ppreg/rng.hpp"
#include "ppreg/warp.hpp"

namespace ppreg {

/// Exact sample from the model on [0, horizon] by Ogata thinning. The
/// dominating rate is re-evaluated after every candidate; bump activations
/// are treated as breakpoints so the bound stays valid for Poisson models.
/// Refuses non-stationary Hawkes parameters (branching spectral radius >= 1).
EventSequence simulate_thinning(const ModelSpec& model, double horizon, Rng& rng,
                                std::string id = "sim");

struct SyntheticDatasetSpec {
    ModelSpec model;
    int sequence_count = 200;
    double horizon = 100.0;
    int warp_basis_count = 10;
    std::uint64_t seed = 0;
    double train_fraction = 0.5;
    int warp_resolution = 200;
    bool identity_warps = false;  // debug: keep training sequences unwarped
};

struct TrainSequence {
    EventSequence observed;        // warped event times
    PiecewiseLinearWarp true_warp;  // standard timeline -> observed timeline
};

struct SyntheticDataset {
    std::vector<TrainSequence> train;
    std::vector<EventSequence> test;  // unwarped
    ModelSpec true_model;
};

/// Simulate sequence_count sequences, split train/test, and warp each
/// training sequence with its own cosine-basis warp. All randomness is
/// derived from spec.seed through per-sequence child streams.
SyntheticDataset make_synthetic_dataset(const SyntheticDatasetSpec& spec);

/// Concatenate sequences of identical horizon T, shifting the k-th block by
/// k*T; the result lives on [0, K*T].
EventSequence stitch(std::span<const EventSequence> seqs);

/// Block-diagonal composition of the member warps of a stitched sequence.
PiecewiseLinearWarp stitch_warps(std::span<const PiecewiseLinearWarp> warps);

/// For every training sequence, append k distinct partners sampled without
/// replacement (never itself). Output size equals input size; horizons grow
/// to (k+1)*T and true warps are stitched alongside.
std::vector<TrainSequence> stitch_randomly(const std::vector<TrainSequence>& train, int k, Rng& rng);

}  // namespace ppreg
