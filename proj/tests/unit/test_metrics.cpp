#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ppreg/metrics.hpp"
#include "ppreg/simulate.hpp"

using namespace ppreg;

namespace {

ModelSpec homogeneous(double rate) {
    PoissonBumpModel m;
    m.bumps = {{0.0, 0.0, rate}};
    return ModelSpec(m);
}

PoissonStructure homogeneous_structure() {
    PoissonStructure s;
    s.bumps = {{0.0, 0.0, 0.0}};
    return s;
}

}  // namespace

TEST_CASE("holdout loglik: homogeneous closed form") {
    const ModelSpec model = homogeneous(0.8);
    EventSequence seq("s", 100.0, {{1.0, 0}, {2.0, 0}, {3.0, 0}});
    const std::vector<EventSequence> test{seq};
    CHECK(holdout_loglik(model, test) ==
          doctest::Approx(3.0 * std::log(0.8) - 80.0).epsilon(1e-13));

    EventSequence empty("e", 100.0, {});
    const std::vector<EventSequence> test2{empty};
    CHECK(holdout_loglik(model, test2) == doctest::Approx(-80.0).epsilon(1e-14));
}

TEST_CASE("holdout loglik: the generating model wins on average") {
    const ModelSpec truth = homogeneous(1.0);
    const ModelSpec doubled = homogeneous(2.0);
    Rng root(15);
    double margin = 0.0;
    for (int r = 0; r < 100; ++r) {
        Rng stream = root.child(static_cast<std::uint64_t>(r));
        const std::vector<EventSequence> test{simulate_thinning(truth, 100.0, stream)};
        margin += holdout_loglik(truth, test) - holdout_loglik(doubled, test);
    }
    CHECK(margin > 0.0);
}

TEST_CASE("risk_over: degenerate numerator, denominator and symmetry") {
    std::vector<PiecewiseLinearWarp> identities(3, PiecewiseLinearWarp::identity(100.0, 5));
    CHECK(risk_over(identities) == 0.0);

    const PiecewiseLinearWarp w({0.0, 50.0, 100.0}, {0.0, 62.0, 100.0});
    std::vector<PiecewiseLinearWarp> same{w, w, w};
    CHECK(std::isinf(risk_over(same)));

    const PiecewiseLinearWarp mirror({0.0, 50.0, 100.0}, {0.0, 38.0, 100.0});
    std::vector<PiecewiseLinearWarp> balanced{w, mirror};
    CHECK(risk_over(balanced) == 0.0);

    Rng rng(3);
    std::vector<PiecewiseLinearWarp> warps;
    for (int m = 0; m < 4; ++m) warps.push_back(generate_cosine_warp(8, 100.0, rng).warp);
    const double base = risk_over(warps);
    std::swap(warps[0], warps[3]);
    std::swap(warps[1], warps[2]);
    CHECK(risk_over(warps) == doctest::Approx(base).epsilon(1e-12));

    std::vector<PiecewiseLinearWarp> mismatched{w, PiecewiseLinearWarp::identity(50.0)};
    CHECK_THROWS_AS((void)risk_over(mismatched), DataError);
}

TEST_CASE("risk_under: frozen replicate seed gives zero variance") {
    const ModelSpec model = homogeneous(1.0);
    FitProcedure fit = [](const std::vector<EventSequence>& data) {
        std::vector<PiecewiseLinearWarp> ids;
        for (const EventSequence& s : data) ids.push_back(PiecewiseLinearWarp::identity(s.horizon()));
        return ModelSpec(fit_poisson_mle(data, ids, homogeneous_structure()));
    };
    const std::vector<double> horizons{100.0};
    BootstrapConfig config{20, 7, true};
    const RiskUnderResult res = risk_under(model, fit, horizons, config);
    CHECK(res.mean_variance <= 1e-28);  // zero up to accumulation rounding
}

TEST_CASE("risk_under: homogeneous Poisson variance scale") {
    const ModelSpec model = homogeneous(1.0);
    FitProcedure fit = [](const std::vector<EventSequence>& data) {
        std::vector<PiecewiseLinearWarp> ids;
        for (const EventSequence& s : data) ids.push_back(PiecewiseLinearWarp::identity(s.horizon()));
        return ModelSpec(fit_poisson_mle(data, ids, homogeneous_structure()));
    };
    const std::vector<double> one{100.0};
    BootstrapConfig config{200, 11, false};
    const RiskUnderResult res = risk_under(model, fit, one, config, 4);
    CHECK(res.mean_variance > 0.005);
    CHECK(res.mean_variance < 0.015);

    const std::vector<double> two{100.0, 100.0};
    const RiskUnderResult res2 = risk_under(model, fit, two, config, 4);
    const double ratio = res.mean_variance / res2.mean_variance;
    CHECK(ratio > 2.0 / 1.5);
    CHECK(ratio < 2.0 * 1.5);
    CHECK(res2.mean_variance >= 0.0);
}

TEST_CASE("kendall tau: concordance, discordance and ties") {
    const std::vector<double> x{1.0, 2.0, 3.0};
    const std::vector<double> same{1.0, 2.0, 3.0};
    const std::vector<double> reversed{3.0, 2.0, 1.0};
    const std::vector<double> swapped{2.0, 1.0, 3.0};
    CHECK(kendall_tau(x, same) == doctest::Approx(1.0));
    CHECK(kendall_tau(x, reversed) == doctest::Approx(-1.0));
    CHECK(kendall_tau(x, swapped) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const std::vector<double> short_one{1.0, 2.0};
    CHECK_THROWS_AS((void)kendall_tau(x, short_one), DataError);
    const std::vector<double> tied{5.0, 5.0, 5.0};
    CHECK_THROWS_AS((void)kendall_tau(x, tied), NumericError);
}

TEST_CASE("kendall tau: symmetric and invariant to monotone transforms") {
    Rng rng(9);
    std::vector<double> x, y;
    for (int i = 0; i < 25; ++i) {
        x.push_back(rng.uniform(0.0, 10.0));
        y.push_back(rng.uniform(0.0, 10.0));
    }
    CHECK(kendall_tau(x, y) == doctest::Approx(kendall_tau(y, x)).epsilon(1e-15));
    std::vector<double> fx = x, gy = y;
    for (double& v : fx) v = std::exp(0.3 * v);
    for (double& v : gy) v = std::atan(v) * 2.0 + 7.0;
    CHECK(kendall_tau(fx, gy) == doctest::Approx(kendall_tau(x, y)).epsilon(1e-15));
}

TEST_CASE("infectivity matrix closed form") {
    HawkesParams p;
    p.background = {0.1};
    p.excitation = Matrix(1, 1, 0.5);
    p.decay = 1.0;
    const Matrix psi = infectivity_matrix(p, 100.0);
    CHECK(psi(0, 0) == doctest::Approx(0.5 * (1.0 - std::exp(-100.0))).epsilon(1e-14));

    p.excitation = Matrix(1, 1, 0.0);
    CHECK(infectivity_matrix(p, 100.0)(0, 0) == 0.0);

    // monotone nondecreasing in T
    p.excitation = Matrix(1, 1, 0.5);
    double prev = 0.0;
    for (double horizon : {0.5, 1.0, 5.0, 50.0}) {
        const double v = infectivity_matrix(p, horizon)(0, 0);
        CHECK(v >= prev);
        prev = v;
    }

    // the decay -> 0 limit is phi * T
    p.decay = 1e-12;
    CHECK(infectivity_matrix(p, 100.0)(0, 0) == doctest::Approx(0.5 * 100.0).epsilon(1e-9));
}

TEST_CASE("distortion-error experiment: determinism and identity control") {
    DistortionErrorConfig config;
    config.trials = 6;
    config.sequences_per_trial = 8;
    config.distortion_levels = {0.0, 0.1, 0.2};
    config.truth.background = {0.5};
    config.truth.excitation = Matrix(1, 1, 0.4);
    config.truth.decay = 1.0;
    config.seed = 19;

    const DistortionErrorTable a = distortion_error_experiment(config, 2);
    const DistortionErrorTable b = distortion_error_experiment(config, 1);
    REQUIRE(a.rows.size() == 6);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].distortion == b.rows[i].distortion);
        CHECK(a.rows[i].relative_error == b.rows[i].relative_error);
    }
    CHECK(a.rows[0].distortion == 0.0);
    CHECK(a.rows[1].distortion == doctest::Approx(0.1).epsilon(1e-12));
}
