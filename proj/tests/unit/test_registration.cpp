#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ppreg/registration.hpp"
#include "ppreg/simulate.hpp"

using namespace ppreg;

namespace {

ModelSpec one_type_hawkes(double mu, double phi) {
    HawkesParams p;
    p.background = {mu};
    p.excitation = Matrix(1, 1, phi);
    p.decay = 1.0;
    return ModelSpec(p);
}

SyntheticDataset small_dataset(std::uint64_t seed, int count, bool identity_warps) {
    SyntheticDatasetSpec spec;
    spec.model = one_type_hawkes(0.5, 0.4);
    spec.sequence_count = count;
    spec.horizon = 100.0;
    spec.seed = seed;
    spec.identity_warps = identity_warps;
    return make_synthetic_dataset(spec);
}

std::vector<EventSequence> observed_of(const SyntheticDataset& data) {
    std::vector<EventSequence> out;
    for (const TrainSequence& item : data.train) out.push_back(item.observed);
    return out;
}

}  // namespace

TEST_CASE("total_loss: identity unwarps contribute no regularizer") {
    const SyntheticDataset data = small_dataset(3, 8, true);
    const std::vector<EventSequence> seqs = observed_of(data);
    std::vector<PiecewiseLinearWarp> identities;
    for (const EventSequence& s : seqs) identities.push_back(PiecewiseLinearWarp::identity(s.horizon(), 10));

    double nll_sum = 0.0;
    for (const EventSequence& s : seqs) nll_sum += neg_log_likelihood(data.true_model, s);
    CHECK(total_loss(data.true_model, identities, seqs, 5.0) ==
          doctest::Approx(nll_sum).epsilon(1e-12));
}

TEST_CASE("total_loss: gamma zero is the bare NLL sum under any warps") {
    const SyntheticDataset data = small_dataset(5, 6, false);
    const std::vector<EventSequence> seqs = observed_of(data);
    Rng rng(4);
    std::vector<PiecewiseLinearWarp> unwarps;
    for (const EventSequence& s : seqs) unwarps.push_back(generate_cosine_warp(6, s.horizon(), rng, 12).warp);

    double nll_sum = 0.0;
    for (std::size_t m = 0; m < seqs.size(); ++m) {
        nll_sum += warped_neg_log_likelihood(data.true_model, unwarps[m], seqs[m]);
    }
    CHECK(total_loss(data.true_model, unwarps, seqs, 0.0) ==
          doctest::Approx(nll_sum).epsilon(1e-12));
}

TEST_CASE("total_loss: regularizer integral matches quadrature") {
    const SyntheticDataset data = small_dataset(7, 5, false);
    const std::vector<EventSequence> seqs = observed_of(data);
    Rng rng(6);
    std::vector<PiecewiseLinearWarp> unwarps;
    for (const EventSequence& s : seqs) unwarps.push_back(generate_cosine_warp(6, s.horizon(), rng, 12).warp);

    const double gamma = 2.5;
    const double reg_term =
        total_loss(data.true_model, unwarps, seqs, gamma) -
        total_loss(data.true_model, unwarps, seqs, 0.0);

    std::vector<double> breakpoints;
    for (const PiecewiseLinearWarp& u : unwarps) {
        breakpoints.insert(breakpoints.end(), u.landmarks().begin(), u.landmarks().end());
    }
    const double oracle = oracles::adaptive_simpson_split(
        [&](double s) {
            double mean = 0.0;
            for (const PiecewiseLinearWarp& u : unwarps) {
                mean += u(s) / static_cast<double>(unwarps.size());
            }
            return (mean - s) * (mean - s);
        },
        breakpoints, 1e-10);
    CHECK(oracles::relative_gap(reg_term, gamma * oracle) < 1e-9);
}

TEST_CASE("relative estimation error basics") {
    const ModelSpec truth = one_type_hawkes(0.5, 0.4);
    CHECK(relative_estimation_error(truth, truth) == 0.0);
    CHECK(relative_estimation_error(one_type_hawkes(1.0, 0.8), truth) ==
          doctest::Approx(1.0).epsilon(1e-12));

    const ModelSpec est = one_type_hawkes(0.6, 0.3);
    const double expected = std::sqrt(0.01 + 0.01) / std::sqrt(0.25 + 0.16);
    CHECK(relative_estimation_error(est, truth) == doctest::Approx(expected).epsilon(1e-12));

    PoissonBumpModel p;
    p.bumps = {{0.0, 0.0, 1.0}};
    CHECK_THROWS_AS((void)relative_estimation_error(ModelSpec(p), truth), DataError);
}

TEST_CASE("register: single outer iteration equals the raw fit") {
    const SyntheticDataset data = small_dataset(11, 10, false);
    const std::vector<EventSequence> seqs = observed_of(data);

    RegistrationConfig config;
    config.outer_iters = 1;
    config.landmark_count = 10;
    const HawkesStructure structure{1, 1.0};
    const RegistrationResult result = register_sequences(seqs, structure, config);

    std::vector<PiecewiseLinearWarp> identities;
    for (const EventSequence& s : seqs) identities.push_back(PiecewiseLinearWarp::identity(s.horizon()));
    const HawkesFit raw = fit_hawkes_mle(seqs, identities, structure, config.mle);
    CHECK(oracles::relative_gap(result.model.hawkes().background[0], raw.params.background[0]) <
          1e-12);
    CHECK(oracles::relative_gap(result.model.hawkes().excitation(0, 0),
                                raw.params.excitation(0, 0)) < 1e-12);
    CHECK(result.loss_trace.size() == 2);
}

TEST_CASE("register: parallel and sequential agree exactly when M=1") {
    const SyntheticDataset data = small_dataset(13, 2, false);
    const std::vector<EventSequence> seqs{data.train[0].observed};

    RegistrationConfig config;
    config.outer_iters = 3;
    config.landmark_count = 8;
    config.update_mode = UpdateMode::parallel;
    const RegistrationResult a = register_sequences(seqs, HawkesStructure{1, 1.0}, config);
    config.update_mode = UpdateMode::sequential;
    const RegistrationResult b = register_sequences(seqs, HawkesStructure{1, 1.0}, config);

    REQUIRE(a.loss_trace.size() == b.loss_trace.size());
    for (std::size_t k = 0; k < a.loss_trace.size(); ++k) CHECK(a.loss_trace[k] == b.loss_trace[k]);
    for (std::size_t k = 0; k < a.unwarps[0].landmark_count(); ++k) {
        CHECK(a.unwarps[0].values()[k] == b.unwarps[0].values()[k]);
    }
}

TEST_CASE("register: deterministic across runs and thread counts") {
    const SyntheticDataset data = small_dataset(17, 8, false);
    const std::vector<EventSequence> seqs = observed_of(data);

    RegistrationConfig config;
    config.outer_iters = 2;
    config.landmark_count = 8;
    config.threads = 1;
    const RegistrationResult a = register_sequences(seqs, HawkesStructure{1, 1.0}, config);
    config.threads = 4;
    const RegistrationResult b = register_sequences(seqs, HawkesStructure{1, 1.0}, config);

    REQUIRE(a.loss_trace.size() == b.loss_trace.size());
    for (std::size_t k = 0; k < a.loss_trace.size(); ++k) CHECK(a.loss_trace[k] == b.loss_trace[k]);
    for (std::size_t m = 0; m < a.unwarps.size(); ++m) {
        for (std::size_t k = 0; k < a.unwarps[m].landmark_count(); ++k) {
            CHECK(a.unwarps[m].values()[k] == b.unwarps[m].values()[k]);
        }
    }
    CHECK(a.model.hawkes().background[0] == b.model.hawkes().background[0]);
}

TEST_CASE("register: sequential trace is non-increasing") {
    const SyntheticDataset data = small_dataset(19, 10, false);
    const std::vector<EventSequence> seqs = observed_of(data);

    RegistrationConfig config;
    config.outer_iters = 4;
    config.landmark_count = 10;
    config.update_mode = UpdateMode::sequential;
    config.loss_tolerance = 0.0;
    const RegistrationResult result = register_sequences(seqs, HawkesStructure{1, 1.0}, config);
    for (std::size_t k = 0; k + 1 < result.loss_trace.size(); ++k) {
        CHECK(result.loss_trace[k + 1] <= result.loss_trace[k] +
                                              1e-6 * std::abs(result.loss_trace[k]));
    }
}

TEST_CASE("register: unwarped data is recovered as near-identity warps") {
    const SyntheticDataset data = small_dataset(23, 40, true);
    const std::vector<EventSequence> seqs = observed_of(data);

    RegistrationConfig config;
    config.outer_iters = 4;
    config.update_mode = UpdateMode::sequential;
    const RegistrationResult result = register_sequences(seqs, HawkesStructure{1, 1.0}, config);
    for (const PiecewiseLinearWarp& w : result.warps) CHECK(distortion(w) < 0.05);

    std::vector<PiecewiseLinearWarp> identities;
    for (const EventSequence& s : seqs) identities.push_back(PiecewiseLinearWarp::identity(s.horizon()));
    const HawkesFit raw = fit_hawkes_mle(seqs, identities, HawkesStructure{1, 1.0}, config.mle);
    const double err_rpp = relative_estimation_error(result.model, data.true_model);
    const double err_mle = relative_estimation_error(ModelSpec(raw.params), data.true_model);
    CHECK(err_rpp <= err_mle + 0.03);
}

TEST_CASE("register: warps are exact inverses of the unwarps") {
    const SyntheticDataset data = small_dataset(29, 5, false);
    RegistrationConfig config;
    config.outer_iters = 2;
    config.landmark_count = 8;
    const RegistrationResult result =
        register_sequences(observed_of(data), HawkesStructure{1, 1.0}, config);
    for (std::size_t m = 0; m < result.unwarps.size(); ++m) {
        const PiecewiseLinearWarp inv = result.unwarps[m].inverse();
        for (std::size_t k = 0; k < inv.landmark_count(); ++k) {
            CHECK(result.warps[m].landmarks()[k] == inv.landmarks()[k]);
            CHECK(result.warps[m].values()[k] == inv.values()[k]);
        }
    }
}
