#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "ppreg/experiments.hpp"
#include "ppreg/io.hpp"
#include "ppreg/metrics.hpp"

namespace fs = std::filesystem;
using namespace ppreg;

namespace {

struct Args {
    std::string config_path;
    std::string data_path;
    std::string train_path;
    std::string result_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    std::string mode = "parallel";
    std::string experiment_kind;
};

fs::path out_file(const Args& args, const std::string& name) {
    fs::create_directories(args.out_dir);
    return fs::path(args.out_dir) / name;
}

RunConfig load_config(const Args& args) {
    if (args.config_path.empty()) throw DataError("--config is required");
    return parse_run_config(args.config_path);
}

Provenance provenance(const Args& args, const RunConfig& config, const std::string& command) {
    return Provenance{command, args.seed, config.config_hash};
}

ModelSpec require_truth(const RunConfig& config) {
    if (!config.truth.has_value()) {
        throw DataError("this command needs ground-truth model parameters in the config");
    }
    return *config.truth;
}

SyntheticDatasetSpec dataset_spec(const RunConfig& config, std::uint64_t seed) {
    SyntheticDatasetSpec spec;
    spec.model = require_truth(config);
    spec.sequence_count = config.sequences;
    spec.horizon = config.horizon;
    spec.warp_basis_count = config.warp_basis;
    spec.seed = seed;
    spec.train_fraction = config.train_fraction;
    spec.warp_resolution = config.warp_resolution;
    spec.identity_warps = config.identity_warps;
    return spec;
}

LoadedDataset load_train_data(const Args& args, const RunConfig& config) {
    const std::string path = !args.data_path.empty() ? args.data_path : config.train_path;
    if (!path.empty()) return load_dataset(path);
    // No dataset on disk: reproduce the seeded synthetic training set.
    const SyntheticDataset data = make_synthetic_dataset(dataset_spec(config, args.seed));
    LoadedDataset out;
    out.type_count = data.true_model.type_count();
    for (const TrainSequence& item : data.train) {
        out.sequences.push_back(item.observed);
        out.covariates.push_back(std::nullopt);
    }
    return out;
}

ModelStructure structure_for_fit(const ModelSpec& model) {
    if (model.is_hawkes()) {
        return HawkesStructure{model.type_count(), model.hawkes().decay};
    }
    const PoissonBumpModel& p = model.poisson();
    return PoissonStructure{p.bumps, p.replicate_period, p.replicate_count};
}

int cmd_simulate(const Args& args) {
    const RunConfig config = load_config(args);
    const SyntheticDataset data = make_synthetic_dataset(dataset_spec(config, args.seed));

    LoadedDataset train{data.true_model.type_count(), {}, {}};
    DatasetTruth truth{data.true_model, {}};
    std::size_t train_events = 0, test_events = 0;
    for (const TrainSequence& item : data.train) {
        train.sequences.push_back(item.observed);
        train.covariates.push_back(std::nullopt);
        truth.warps.push_back(item.true_warp);
        train_events += item.observed.size();
    }
    LoadedDataset test{data.true_model.type_count(), data.test, {}};
    test.covariates.assign(test.sequences.size(), std::nullopt);
    for (const EventSequence& s : data.test) test_events += s.size();

    save_dataset(train, out_file(args, "train.jsonl"));
    save_dataset(test, out_file(args, "test.jsonl"));
    save_truth(truth, out_file(args, "truth.json"));
    std::cout << "simulate: " << train.sequences.size() << " train / " << test.sequences.size()
              << " test sequences, " << train_events << "/" << test_events << " events, seed "
              << args.seed << "\n";
    return 0;
}

int cmd_register(const Args& args) {
    const RunConfig config = load_config(args);
    const LoadedDataset data = load_train_data(args, config);

    RegistrationConfig reg = config.registration;
    reg.seed = args.seed;
    reg.threads = args.threads;
    if (args.mode == "sequential") {
        reg.update_mode = UpdateMode::sequential;
    } else if (args.mode == "parallel") {
        reg.update_mode = UpdateMode::parallel;
    } else {
        throw CLI::ValidationError("--mode must be parallel or sequential");
    }

    const RegistrationResult result = register_sequences(data.sequences, config.structure, reg);
    save_result(result, out_file(args, "result.json"));
    const Provenance prov = provenance(args, config, "register");
    emit_loss_csv(result.loss_trace, out_file(args, "loss.csv"), prov);
    emit_warp_curves_csv(result, out_file(args, "warps.csv"), prov);

    std::cout << "register: " << data.sequences.size() << " sequences, "
              << result.loss_trace.size() - 1 << " iterations, final loss "
              << format_double(result.loss_trace.back());
    if (config.truth.has_value()) {
        std::cout << ", relative error "
                  << format_double(relative_estimation_error(result.model, *config.truth));
    }
    std::cout << "\n";
    return 0;
}

int cmd_stitch(const Args& args) {
    const RunConfig config = load_config(args);
    const LoadedDataset data = load_train_data(args, config);
    const int k = config.stitch_k;
    if (k < 0) throw DataError("stitch_k must be nonnegative");

    std::vector<TrainSequence> items;
    for (const EventSequence& s : data.sequences) {
        items.push_back({s, PiecewiseLinearWarp::identity(s.horizon())});
    }
    Rng rng(args.seed);
    const std::vector<TrainSequence> stitched = stitch_randomly(items, k, rng);

    LoadedDataset out{data.type_count, {}, {}};
    for (std::size_t m = 0; m < stitched.size(); ++m) {
        out.sequences.push_back(stitched[m].observed);
        out.covariates.push_back(data.covariates[m]);
    }
    save_dataset(out, out_file(args, "stitched.jsonl"));
    std::cout << "stitch: " << out.sequences.size() << " sequences on horizon "
              << format_double(out.sequences.empty() ? 0.0 : out.sequences[0].horizon()) << " (K="
              << k << ")\n";
    return 0;
}

int cmd_evaluate(const Args& args) {
    const RunConfig config = load_config(args);
    if (args.result_path.empty()) throw DataError("--result is required");
    const RegistrationResult result = load_result(args.result_path);

    std::vector<std::vector<std::string>> rows;
    std::string summary = "evaluate:";
    if (result.warps.size() >= 2) {
        const double over = risk_over(result.warps);
        rows.push_back({"risk_over", format_double(over)});
        summary += " risk_over=" + format_double(over);
    }
    const std::string test_path = !args.data_path.empty() ? args.data_path : config.test_path;
    if (!test_path.empty()) {
        const LoadedDataset test = load_dataset(test_path);
        const double ll = holdout_loglik(result.model, test.sequences);
        rows.push_back({"holdout_loglik", format_double(ll)});
        summary += " holdout_loglik=" + format_double(ll);
    }
    if (config.truth.has_value()) {
        const double err = relative_estimation_error(result.model, *config.truth);
        rows.push_back({"relative_error", format_double(err)});
        summary += " relative_error=" + format_double(err);
    }
    if (!args.train_path.empty()) {
        // Rank correlation between per-sequence warp deviations and covariates.
        const LoadedDataset train = load_dataset(args.train_path);
        if (train.sequences.size() != result.warps.size()) {
            throw DataError("--train sequence count does not match the result's warps");
        }
        std::vector<double> deviations, covariates;
        for (std::size_t m = 0; m < result.warps.size(); ++m) {
            if (train.covariates[m].has_value()) {
                deviations.push_back(identity_deviation(result.warps[m]));
                covariates.push_back(*train.covariates[m]);
            }
        }
        if (deviations.size() >= 2) {
            const double tau = kendall_tau(deviations, covariates);
            rows.push_back({"kendall_tau", format_double(tau)});
            summary += " kendall_tau=" + format_double(tau);
        }
    }
    emit_table_csv({"metric", "value"}, rows, out_file(args, "metrics.csv"),
                   provenance(args, config, "evaluate"));
    std::cout << summary << "\n";
    return 0;
}

int cmd_bootstrap(const Args& args) {
    const RunConfig config = load_config(args);
    if (args.result_path.empty()) throw DataError("--result is required");
    const RegistrationResult result = load_result(args.result_path);

    std::vector<double> horizons;
    if (!args.data_path.empty()) {
        for (const EventSequence& s : load_dataset(args.data_path).sequences) {
            horizons.push_back(s.horizon());
        }
    } else {
        for (const PiecewiseLinearWarp& u : result.unwarps) horizons.push_back(u.horizon());
    }

    const ModelStructure structure = structure_for_fit(result.model);
    const RegistrationConfig reg = config.registration;
    FitProcedure fit = [&](const std::vector<EventSequence>& data) {
        std::vector<PiecewiseLinearWarp> identities;
        for (const EventSequence& s : data) identities.push_back(PiecewiseLinearWarp::identity(s.horizon()));
        if (std::holds_alternative<HawkesStructure>(structure)) {
            return ModelSpec(fit_hawkes_mle(data, identities, std::get<HawkesStructure>(structure),
                                            reg.mle)
                                 .params);
        }
        return ModelSpec(fit_poisson_mle(data, identities, std::get<PoissonStructure>(structure),
                                         reg.poisson));
    };

    BootstrapConfig boot{config.bootstrap_replicates, args.seed, false};
    const RiskUnderResult risk = risk_under(result.model, fit, horizons, boot, args.threads);

    std::vector<std::vector<std::string>> rows{{"risk_under", format_double(risk.mean_variance)}};
    for (std::size_t k = 0; k < risk.per_parameter_variance.size(); ++k) {
        rows.push_back({"var_param_" + std::to_string(k), format_double(risk.per_parameter_variance[k])});
    }
    emit_table_csv({"metric", "value"}, rows, out_file(args, "bootstrap.csv"),
                   provenance(args, config, "bootstrap"));
    std::cout << "bootstrap: risk_under=" << format_double(risk.mean_variance) << " (B="
              << config.bootstrap_replicates << ")\n";
    return 0;
}

int cmd_experiment(const Args& args) {
    const RunConfig config = load_config(args);
    const Provenance prov = provenance(args, config, "experiment " + args.experiment_kind);

    if (args.experiment_kind == "fig2") {
        const ModelSpec truth = require_truth(config);
        if (!truth.is_hawkes()) throw DataError("the distortion experiment uses a Hawkes truth");
        DistortionErrorConfig dec;
        dec.trials = config.trials;
        dec.sequences_per_trial = config.sequences_per_trial;
        dec.horizon = config.horizon;
        dec.distortion_levels = config.distortion_levels;
        dec.truth = truth.hawkes();
        dec.warp_basis_count = config.warp_basis;
        dec.seed = args.seed;
        dec.mle = config.registration.mle;
        const DistortionErrorTable table = distortion_error_experiment(dec, args.threads);

        std::vector<std::vector<std::string>> rows;
        for (const DistortionErrorRow& row : table.rows) {
            rows.push_back({format_double(row.distortion), format_double(row.relative_error)});
        }
        emit_table_csv({"distortion", "relative_error"}, rows, out_file(args, "fig2.csv"), prov,
                       {"pearson=" + format_double(table.pearson),
                        "kendall=" + format_double(table.kendall)});
        std::cout << "experiment fig2: " << table.rows.size() << " trials, pearson "
                  << format_double(table.pearson) << "\n";
        return 0;
    }

    if (args.experiment_kind == "synthetic") {
        SyntheticExperimentConfig sec;
        sec.truth = require_truth(config);
        sec.structure = config.structure;
        sec.train_sizes = config.train_sizes;
        sec.stitch_counts = config.stitch_counts;
        sec.seeds = config.experiment_seeds;
        sec.base_seed = args.seed;
        sec.horizon = config.horizon;
        sec.total_sequences = config.sequences;
        sec.warp_basis_count = config.warp_basis;
        sec.identity_warps = config.identity_warps;
        sec.registration = config.registration;
        sec.threads = args.threads;
        const SyntheticExperimentResult result = experiment_synthetic(sec);

        std::vector<std::vector<std::string>> rows;
        for (const SyntheticExperimentRow& row : result.rows) {
            rows.push_back({row.method, std::to_string(row.train_size), std::to_string(row.seed),
                            format_double(row.relative_error), format_double(row.holdout_loglik)});
        }
        emit_table_csv({"method", "train_size", "seed", "relative_error", "holdout_loglik"}, rows,
                       out_file(args, "synthetic.csv"), prov);
        std::cout << "experiment synthetic: " << rows.size() << " rows over "
                  << config.experiment_seeds << " seeds\n";
        return 0;
    }

    if (args.experiment_kind == "sweep-gamma" || args.experiment_kind == "sweep-landmarks") {
        SweepConfig sc;
        sc.truth = require_truth(config);
        sc.structure = config.structure;
        sc.train_size = config.sweep_train_size;
        sc.seeds = config.experiment_seeds;
        sc.base_seed = args.seed;
        sc.horizon = config.horizon;
        sc.warp_basis_count = config.warp_basis;
        sc.registration = config.registration;
        sc.threads = args.threads;

        SweepResult result;
        std::string column, file;
        if (args.experiment_kind == "sweep-gamma") {
            result = sweep_gamma(sc, config.gamma_grid);
            column = "gamma";
            file = "gamma.csv";
        } else {
            result = sweep_landmarks(sc, config.landmark_grid);
            column = "landmarks";
            file = "landmarks.csv";
        }
        std::vector<std::vector<std::string>> rows;
        for (const SweepPoint& p : result.points) {
            rows.push_back({format_double(p.value), format_double(p.median_relative_error)});
        }
        emit_table_csv({column, "median_relative_error"}, rows, out_file(args, file), prov);
        std::cout << "experiment " << args.experiment_kind << ": " << rows.size()
                  << " grid points\n";
        return 0;
    }

    throw DataError("unknown experiment '" + args.experiment_kind + "'");
}

}  // namespace

int main(int argc, char** argv) {
    Args args;
    CLI::App app{"ppreg: learn a shared point process and per-sequence time warps"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "JSON run configuration")->required();
        cmd->add_option("--seed", args.seed, "random seed");
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--threads", args.threads, "worker threads");
    };

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
    add_common(simulate_cmd);

    CLI::App* register_cmd = app.add_subcommand("register", "fit the registered model and warps");
    add_common(register_cmd);
    register_cmd->add_option("--data", args.data_path, "training dataset (jsonl)");
    register_cmd->add_option("--mode", args.mode, "warp update mode: parallel|sequential");

    CLI::App* stitch_cmd = app.add_subcommand("stitch", "randomly stitch sequences");
    add_common(stitch_cmd);
    stitch_cmd->add_option("--data", args.data_path, "dataset to stitch (jsonl)");

    CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score a registration result");
    add_common(evaluate_cmd);
    evaluate_cmd->add_option("--result", args.result_path, "result.json to evaluate")->required();
    evaluate_cmd->add_option("--data", args.data_path, "held-out test dataset (jsonl)");
    evaluate_cmd->add_option("--train", args.train_path, "training dataset with covariates");

    CLI::App* bootstrap_cmd = app.add_subcommand("bootstrap", "parametric-bootstrap risk_under");
    add_common(bootstrap_cmd);
    bootstrap_cmd->add_option("--result", args.result_path, "result.json to bootstrap")->required();
    bootstrap_cmd->add_option("--data", args.data_path, "dataset supplying the horizons");

    CLI::App* experiment_cmd = app.add_subcommand("experiment", "run a study protocol");
    add_common(experiment_cmd);
    experiment_cmd
        ->add_option("kind", args.experiment_kind,
                     "one of: fig2, synthetic, sweep-gamma, sweep-landmarks")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (simulate_cmd->parsed()) return cmd_simulate(args);
        if (register_cmd->parsed()) return cmd_register(args);
        if (stitch_cmd->parsed()) return cmd_stitch(args);
        if (evaluate_cmd->parsed()) return cmd_evaluate(args);
        if (bootstrap_cmd->parsed()) return cmd_bootstrap(args);
        if (experiment_cmd->parsed()) return cmd_experiment(args);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
