#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ppreg/optim.hpp"
#include "ppreg/simulate.hpp"
#include "ppreg/warp_solver.hpp"

using namespace ppreg;

namespace {

HawkesParams one_type(double mu, double phi, double decay = 1.0) {
    HawkesParams p;
    p.background = {mu};
    p.excitation = Matrix(1, 1, phi);
    p.decay = decay;
    return p;
}

struct Instance {
    ModelSpec model;
    PiecewiseLinearWarp unwarp;
    EventSequence seq;
};

Instance random_instance(std::uint64_t seed, int landmark_count = 6) {
    Rng rng(seed);
    const ModelSpec model(one_type(rng.uniform(0.2, 0.6), rng.uniform(0.1, 0.5)));
    EventSequence seq = simulate_thinning(model, 50.0, rng);
    if (seq.empty()) {
        seq = EventSequence("fallback", 50.0, {{10.0, 0}, {20.0, 0}});
    }
    const GeneratedWarp g = generate_cosine_warp(5, 50.0, rng, landmark_count - 1);
    return {model, g.warp, seq};
}

// Frozen exponential components of each event's intensity at the expansion
// unwarp, recomputed from first principles (independent of the solver).
struct FrozenTerms {
    std::vector<std::vector<double>> log_alpha;
    std::vector<std::vector<double>> beta;
};

FrozenTerms frozen_terms(const ModelSpec& model, const PiecewiseLinearWarp& unwarp,
                         const EventSequence& seq) {
    FrozenTerms out;
    const std::vector<double> x = unwarp_times(unwarp, seq);
    const HawkesParams& h = model.hawkes();
    for (std::size_t i = 0; i < seq.size(); ++i) {
        std::vector<double> la{std::log(h.background[static_cast<std::size_t>(seq[i].type)])};
        std::vector<double> be{0.0};
        for (std::size_t j = 0; j < i; ++j) {
            const double phi = h.excitation(static_cast<std::size_t>(seq[i].type),
                                            static_cast<std::size_t>(seq[j].type));
            if (phi > 0.0) {
                la.push_back(std::log(phi) + h.decay * x[j]);
                be.push_back(h.decay);
            }
        }
        out.log_alpha.push_back(std::move(la));
        out.beta.push_back(std::move(be));
    }
    return out;
}

// Dropped constant of the Jensen bound, recomputed independently.
double dropped_constant(const FrozenTerms& terms, const std::vector<double>& x) {
    double c = 0.0;
    for (std::size_t i = 0; i < terms.log_alpha.size(); ++i) {
        double lam = 0.0;
        std::vector<double> vals(terms.log_alpha[i].size());
        for (std::size_t j = 0; j < vals.size(); ++j) {
            vals[j] = std::exp(terms.log_alpha[i][j] - terms.beta[i][j] * x[i]);
            lam += vals[j];
        }
        for (std::size_t j = 0; j < vals.size(); ++j) {
            const double q = vals[j] / lam;
            if (q > 0.0) c += q * (std::log(q) - terms.log_alpha[i][j]);
        }
    }
    return c;
}

// The function the Jensen bound majorizes: frozen compensator masses and
// frozen intensity components, re-evaluated at a candidate warp.
double frozen_nll(const SurrogateCoefficients& coeffs, const FrozenTerms& terms,
                  const EventSequence& seq, std::span<const double> d) {
    const std::vector<double>& t = coeffs.landmarks;
    double value = 0.0;
    std::vector<double> prefix(d.size() + 1, 0.0);
    for (std::size_t l = 0; l < d.size(); ++l) {
        value += coeffs.p[l] * (t[l + 1] - t[l]) / d[l];
        prefix[l + 1] = prefix[l] + d[l];
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const std::size_t l = coeffs.events[i].segment;
        const double u = prefix[l] + d[l] * (seq[i].time - t[l]) / (t[l + 1] - t[l]);
        double lam = 0.0;
        for (std::size_t j = 0; j < terms.log_alpha[i].size(); ++j) {
            lam += std::exp(terms.log_alpha[i][j] - terms.beta[i][j] * u);
        }
        value -= std::log(lam);
    }
    return value;
}

std::vector<double> perturbed(const std::vector<double>& d, Rng& rng, double horizon,
                              double scale, double floor_value = 1e-8) {
    std::vector<double> out = d;
    for (double& v : out) v += rng.uniform(-scale, scale);
    project_floored_simplex(out, floor_value * horizon, horizon);
    return out;
}

}  // namespace

TEST_CASE("surrogate coefficients: q normalizes to one per event") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const Instance inst = random_instance(seed);
        const SurrogateCoefficients coeffs =
            surrogate_coefficients(inst.model, inst.unwarp, inst.seq);
        REQUIRE(coeffs.events.size() == inst.seq.size());
        for (const SurrogateEventTerm& e : coeffs.events) {
            double total = 0.0;
            for (double q : e.q) {
                CHECK(q >= 0.0);
                CHECK(q <= 1.0 + 1e-15);
                total += q;
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("surrogate coefficients: background-only degenerate case") {
    const ModelSpec model(one_type(0.4, 0.0));
    EventSequence seq("s", 50.0, {{5.0, 0}, {17.0, 0}, {44.0, 0}});
    Rng rng(5);
    const PiecewiseLinearWarp unwarp = generate_cosine_warp(5, 50.0, rng, 8).warp;
    const SurrogateCoefficients coeffs = surrogate_coefficients(model, unwarp, seq);
    for (const SurrogateEventTerm& e : coeffs.events) {
        REQUIRE(e.q.size() == 1);
        CHECK(e.q[0] == 1.0);
        CHECK(e.weight == 0.0);
    }
    for (std::size_t l = 0; l < coeffs.p.size(); ++l) {
        const double mass = 0.4 * (unwarp.values()[l + 1] - unwarp.values()[l]);
        CHECK(coeffs.p[l] == doctest::Approx(mass).epsilon(1e-12));
    }
}

TEST_CASE("surrogate coefficients: masses partition the unwarped compensator") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        const Instance inst = random_instance(seed);
        const SurrogateCoefficients coeffs =
            surrogate_coefficients(inst.model, inst.unwarp, inst.seq);
        double total = 0.0;
        for (double p : coeffs.p) total += p;
        const EventSequence unwarped = transform_sequence(inst.unwarp, inst.seq);
        const double compensator =
            warped_likelihood_parts(inst.model, PiecewiseLinearWarp::identity(50.0), unwarped)
                .compensator;
        CHECK(oracles::relative_gap(total, compensator) < 1e-9);
    }
}

TEST_CASE("surrogate objective: empty problem evaluates to zero") {
    SurrogateCoefficients coeffs;
    coeffs.landmarks = {0.0, 1.0};
    coeffs.p = {0.0};
    const std::vector<double> d{1.0};
    CHECK(surrogate_objective(coeffs, RegularizerTerms{}, d) == 0.0);
}

TEST_CASE("surrogate objective: midpoint convexity") {
    const Instance inst = random_instance(21);
    const SurrogateCoefficients coeffs = surrogate_coefficients(inst.model, inst.unwarp, inst.seq);
    RegularizerTerms reg;
    reg.gamma = 0.5;
    reg.sequence_count = 3.0;
    reg.abar.assign(coeffs.p.size(), -1.0);
    reg.bbar.assign(coeffs.p.size(), 0.3);
    Rng rng(2);
    const std::vector<double> base = knot_increments(inst.unwarp);
    for (int k = 0; k < 40; ++k) {
        const std::vector<double> d1 = perturbed(base, rng, 50.0, 4.0);
        const std::vector<double> d2 = perturbed(base, rng, 50.0, 4.0);
        std::vector<double> mid(d1.size());
        for (std::size_t l = 0; l < d1.size(); ++l) mid[l] = 0.5 * (d1[l] + d2[l]);
        const double lhs = surrogate_objective(coeffs, reg, mid);
        const double rhs =
            0.5 * (surrogate_objective(coeffs, reg, d1) + surrogate_objective(coeffs, reg, d2));
        CHECK(lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("surrogate equals the true warped NLL at the expansion point") {
    for (std::uint64_t seed : {31ull, 32ull, 33ull, 34ull}) {
        const Instance inst = random_instance(seed);
        const SurrogateCoefficients coeffs =
            surrogate_coefficients(inst.model, inst.unwarp, inst.seq);
        const FrozenTerms terms = frozen_terms(inst.model, inst.unwarp, inst.seq);
        const std::vector<double> x = unwarp_times(inst.unwarp, inst.seq);
        const double constant = dropped_constant(terms, x);
        const std::vector<double> d = knot_increments(inst.unwarp);

        const double surrogate = surrogate_objective(coeffs, RegularizerTerms{}, d);
        const double truth = warped_neg_log_likelihood(inst.model, inst.unwarp, inst.seq);
        CHECK(oracles::relative_gap(surrogate, truth - constant) < 1e-9);
    }
}

TEST_CASE("surrogate dominates the frozen-coefficient NLL everywhere") {
    Rng rng(7);
    for (std::uint64_t seed : {41ull, 42ull, 43ull}) {
        const Instance inst = random_instance(seed);
        const SurrogateCoefficients coeffs =
            surrogate_coefficients(inst.model, inst.unwarp, inst.seq);
        const FrozenTerms terms = frozen_terms(inst.model, inst.unwarp, inst.seq);
        const std::vector<double> x = unwarp_times(inst.unwarp, inst.seq);
        const double constant = dropped_constant(terms, x);
        const std::vector<double> base = knot_increments(inst.unwarp);
        for (int k = 0; k < 25; ++k) {
            const std::vector<double> d = perturbed(base, rng, 50.0, 6.0);
            const double surrogate = surrogate_objective(coeffs, RegularizerTerms{}, d);
            const double frozen = frozen_nll(coeffs, terms, inst.seq, d) - constant;
            CHECK(surrogate >= frozen - 1e-9 * std::max(1.0, std::abs(frozen)));
        }
    }
}

TEST_CASE("surrogate gradient matches central finite differences") {
    Rng rng(51);
    for (std::uint64_t seed : {61ull, 62ull}) {
        const Instance inst = random_instance(seed);
        const SurrogateCoefficients coeffs =
            surrogate_coefficients(inst.model, inst.unwarp, inst.seq);
        RegularizerTerms reg;
        reg.gamma = 0.02;
        reg.sequence_count = 5.0;
        reg.abar.assign(coeffs.p.size(), -1.0);
        reg.bbar.assign(coeffs.p.size(), 0.1);

        const std::vector<double> base = knot_increments(inst.unwarp);
        for (int k = 0; k < 10; ++k) {
            // keep the point far enough from the floor for central differences
            const std::vector<double> d = perturbed(base, rng, 50.0, 3.0, 1e-2);
            const std::vector<double> g = surrogate_gradient(coeffs, reg, d);
            const double h = 1e-6 * 50.0;
            double scale = 1.0;
            for (double v : g) scale = std::max(scale, std::abs(v));
            for (std::size_t l = 0; l < d.size(); ++l) {
                std::vector<double> hi = d, lo = d;
                hi[l] += h;
                lo[l] -= h;
                const double fd = (surrogate_objective(coeffs, reg, hi) -
                                   surrogate_objective(coeffs, reg, lo)) /
                                  (2.0 * h);
                CHECK(std::abs(fd - g[l]) / scale < 1e-5);
            }
        }
    }
}

TEST_CASE("surrogate gradient: pure quadratic case matches the hand expansion") {
    SurrogateCoefficients coeffs;
    coeffs.landmarks = {0.0, 2.0, 5.0, 9.0};
    coeffs.p = {0.0, 0.0, 0.0};
    RegularizerTerms reg;
    reg.gamma = 0.7;
    reg.sequence_count = 4.0;
    reg.abar = {-0.9, -1.1, -1.0};
    reg.bbar = {0.2, -0.3, 0.1};

    const std::vector<double> d{3.0, 2.5, 3.5};
    const std::vector<double> g = surrogate_gradient(coeffs, reg, d);

    // hand expansion: a_l = d_l/delta_l, b_l = prefix_l - a_l t_l
    const std::vector<double>& t = coeffs.landmarks;
    std::vector<double> expected(3, 0.0);
    std::vector<double> prefix{0.0, d[0], d[0] + d[1]};
    for (std::size_t l = 0; l < 3; ++l) {
        const double delta = t[l + 1] - t[l];
        const double a = d[l] / delta;
        const double b = prefix[l] - a * t[l];
        const double ra = 2.0 * reg.gamma / 4.0 * (a / 4.0 + reg.abar[l]);
        const double rb = 2.0 * reg.gamma / 4.0 * (b / 4.0 + reg.bbar[l]);
        expected[l] += ra / delta - rb * t[l] / delta;
        for (std::size_t k = 0; k < l; ++k) expected[k] += rb;
    }
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(g[l] == doctest::Approx(expected[l]).epsilon(1e-12));
    }
}

TEST_CASE("projected gradient reaches stationarity on a frozen surrogate") {
    const Instance inst = random_instance(71);
    const SurrogateCoefficients coeffs = surrogate_coefficients(inst.model, inst.unwarp, inst.seq);
    RegularizerTerms reg;
    reg.gamma = 0.5;
    reg.sequence_count = 1.0;
    reg.abar.assign(coeffs.p.size(), -1.0);
    reg.bbar.assign(coeffs.p.size(), 0.0);

    const double horizon = inst.unwarp.horizon();
    const double floor_value = 1e-8 * horizon;
    PgOptions opts;
    opts.max_iters = 5000;
    opts.grad_tolerance = 1e-8;
    const PgResult res = projected_gradient_minimize(
        [&](const std::vector<double>& v) { return surrogate_objective(coeffs, reg, v); },
        [&](const std::vector<double>& v) { return surrogate_gradient(coeffs, reg, v); },
        [&](std::vector<double>& v) { project_floored_simplex(v, floor_value, horizon); },
        knot_increments(inst.unwarp), opts);

    const std::vector<double> g = surrogate_gradient(coeffs, reg, res.x);
    std::vector<double> probe = res.x;
    for (std::size_t l = 0; l < probe.size(); ++l) probe[l] -= g[l];
    project_floored_simplex(probe, floor_value, horizon);
    double stat = 0.0;
    for (std::size_t l = 0; l < probe.size(); ++l) stat = std::max(stat, std::abs(probe[l] - res.x[l]));
    CHECK(stat < 1e-6);
}

TEST_CASE("solver: huge gamma with M=1 pins the unwarp to the identity") {
    PoissonBumpModel hom;
    hom.bumps = {{0.0, 0.0, 0.5}};
    const ModelSpec model(hom);
    Rng rng(81);
    const EventSequence seq = simulate_thinning(model, 50.0, rng);
    const PiecewiseLinearWarp start = generate_cosine_warp(5, 50.0, rng, 8).warp;

    RegularizerTerms reg;
    reg.gamma = 1e6;
    reg.sequence_count = 1.0;
    reg.abar.assign(start.segment_count(), -1.0);
    reg.bbar.assign(start.segment_count(), 0.0);

    WarpSolverConfig config;
    config.pg_iters = 2000;
    const PiecewiseLinearWarp solved = solve_warp_subproblem(model, start, reg, seq, config);
    double worst = 0.0;
    for (std::size_t k = 0; k < solved.landmark_count(); ++k) {
        worst = std::max(worst, std::abs(solved.values()[k] - solved.landmarks()[k]));
    }
    CHECK(worst < 1e-3 * 50.0);
}

TEST_CASE("solver: the true subproblem objective never increases") {
    for (std::uint64_t seed : {91ull, 92ull, 93ull, 94ull, 95ull}) {
        const Instance inst = random_instance(seed);
        RegularizerTerms reg;
        reg.gamma = 0.01;
        reg.sequence_count = 1.0;
        reg.abar.assign(inst.unwarp.segment_count(), -1.0);
        reg.bbar.assign(inst.unwarp.segment_count(), 0.0);

        const double before = warp_subproblem_objective(inst.model, inst.unwarp, reg, inst.seq);
        const PiecewiseLinearWarp solved =
            solve_warp_subproblem(inst.model, inst.unwarp, reg, inst.seq);
        const double after = warp_subproblem_objective(inst.model, solved, reg, inst.seq);
        CHECK(after <= before + 1e-9);
    }
}

TEST_CASE("solver: unwarped data stays near the identity") {
    const ModelSpec model(one_type(0.5, 0.4));
    Rng rng(101);
    for (int k = 0; k < 3; ++k) {
        Rng stream = rng.child(static_cast<std::uint64_t>(k));
        const EventSequence seq = simulate_thinning(model, 100.0, stream);
        const PiecewiseLinearWarp identity = PiecewiseLinearWarp::identity(100.0, 20);
        RegularizerTerms reg;
        reg.gamma = 0.01;
        reg.sequence_count = 1.0;
        reg.abar.assign(identity.segment_count(), -1.0);
        reg.bbar.assign(identity.segment_count(), 0.0);
        const PiecewiseLinearWarp solved = solve_warp_subproblem(model, identity, reg, seq);
        CHECK(distortion(solved) < 0.05);
    }
}

TEST_CASE("solver output satisfies the constraint set") {
    const Instance inst = random_instance(111, 10);
    RegularizerTerms reg;
    reg.gamma = 0.0;
    const WarpSolverConfig config;
    const PiecewiseLinearWarp solved =
        solve_warp_subproblem(inst.model, inst.unwarp, reg, inst.seq, config);
    CHECK(solved.values().front() == 0.0);
    CHECK(solved.values().back() == solved.horizon());
    const double floor_value =
        config.slope_floor_scale * solved.horizon() / static_cast<double>(solved.landmark_count());
    for (std::size_t l = 0; l < solved.segment_count(); ++l) {
        const double dl = solved.values()[l + 1] - solved.values()[l];
        CHECK(dl >= floor_value * (1.0 - 1e-9));
    }
}
