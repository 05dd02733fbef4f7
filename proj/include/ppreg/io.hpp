#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ppreg/experiments.hpp"
#include "ppreg/metrics.hpp"
#include "ppreg/registration.hpp"

namespace ppreg {

struct LoadedDataset {
    int type_count = 1;
    std::vector<EventSequence> sequences;
    std::vector<std::optional<double>> covariates;  // aligned with sequences
};

/// Line-oriented JSON dataset: a header record followed by one record per
/// sequence. Event types are 1-based on disk, zero-based in memory. Loading
/// is strict: malformed lines, unsorted events, out-of-window times,
/// duplicate ids and unknown keys are rejected with the offending line.
LoadedDataset load_dataset(const std::filesystem::path& path);
void save_dataset(const LoadedDataset& dataset, const std::filesystem::path& path);

void save_result(const RegistrationResult& result, const std::filesystem::path& path);
RegistrationResult load_result(const std::filesystem::path& path);

/// Ground truth of a synthetic dataset: the generating model and the warp
/// applied to each training sequence.
struct DatasetTruth {
    ModelSpec model;
    std::vector<PiecewiseLinearWarp> warps;
};
void save_truth(const DatasetTruth& truth, const std::filesystem::path& path);
DatasetTruth load_truth(const std::filesystem::path& path);

/// Parsed run configuration. Unknown keys anywhere in the file are rejected.
struct RunConfig {
    ModelStructure structure = HawkesStructure{};
    std::optional<ModelSpec> truth;  // present when the file carries parameters

    RegistrationConfig registration;

    // simulation
    int sequences = 200;
    double horizon = 100.0;
    int warp_basis = 10;
    double train_fraction = 0.5;
    int warp_resolution = 200;
    bool identity_warps = false;

    int stitch_k = 1;

    // experiment grids
    std::vector<int> train_sizes{10, 20, 40};
    std::vector<int> stitch_counts{1};
    int experiment_seeds = 5;
    int trials = 100;
    int sequences_per_trial = 40;
    int sweep_train_size = 40;
    std::vector<double> distortion_levels{0.05, 0.1, 0.15, 0.2, 0.25};
    std::vector<double> gamma_grid{1e-3, 1e-2, 1e-1, 1.0, 10.0};
    std::vector<int> landmark_grid{5, 10, 20, 50, 100};

    // bootstrap
    int bootstrap_replicates = 50;

    // dataset paths (optional; CLI flags may override)
    std::string train_path;
    std::string test_path;

    std::string config_hash;  // filled by the parser
};

RunConfig parse_run_config(const std::filesystem::path& path);

/// Seed/config provenance stamped into every emitted CSV.
struct Provenance {
    std::string command;
    std::uint64_t seed = 0;
    std::string config_hash;
};

void emit_loss_csv(std::span<const double> trace, const std::filesystem::path& path,
                   const Provenance& provenance);

/// One warp sampled on a uniform grid, rows of (s, W(s)).
void emit_warp_csv(const PiecewiseLinearWarp& warp, const std::filesystem::path& path,
                   const Provenance& provenance, int points = 200);

/// Long-format warp curves for a whole result: rows of (seq_index, s, warp, unwarp).
void emit_warp_curves_csv(const RegistrationResult& result, const std::filesystem::path& path,
                          const Provenance& provenance, int points = 200);

/// Generic numeric table with optional trailing comment lines.
void emit_table_csv(const std::vector<std::string>& columns,
                    const std::vector<std::vector<std::string>>& rows,
                    const std::filesystem::path& path, const Provenance& provenance,
                    const std::vector<std::string>& trailing_comments = {});

std::string format_double(double value);  // round-trip precision

}  // namespace ppreg
