#include "ppreg/warp_solver.hpp"

#include <cmath>

#include "ppreg/optim.hpp"

namespace ppreg {

namespace {

void hawkes_event_terms(const HawkesParams& params, const EventSequence& seq,
                        const std::vector<double>& x, SurrogateCoefficients& out) {
    const double decay = params.decay;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        SurrogateEventTerm term;
        term.observed_time = seq[i].time;
        const std::size_t ci = static_cast<std::size_t>(seq[i].type);
        std::vector<double> vals{params.background[ci]};
        term.beta.push_back(0.0);
        for (std::size_t j = 0; j < i; ++j) {
            const double v = params.excitation(ci, static_cast<std::size_t>(seq[j].type)) *
                             std::exp(-decay * (x[i] - x[j]));
            if (v > 0.0) {
                vals.push_back(v);
                term.beta.push_back(decay);
            }
        }
        double lam = 0.0;
        for (double v : vals) lam += v;
        if (!(lam > 0.0)) throw ImpossibleEventError(seq.id(), i);
        term.q.resize(vals.size());
        for (std::size_t j = 0; j < vals.size(); ++j) {
            term.q[j] = vals[j] / lam;
            term.weight += term.q[j] * term.beta[j];
        }
        out.events.push_back(std::move(term));
    }
}

void poisson_event_terms(const PoissonBumpModel& model, const EventSequence& seq,
                         const std::vector<double>& x, SurrogateCoefficients& out) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
        SurrogateEventTerm term;
        term.observed_time = seq[i].time;
        std::vector<double> vals;
        for (const PoissonBump& b : model.bumps) {
            for (int k = 0; k < model.replicate_count; ++k) {
                const double onset = b.onset + k * model.replicate_period;
                if (x[i] < onset) continue;
                const double v = b.amplitude * std::exp(-b.decay * (x[i] - onset));
                if (v > 0.0) {
                    vals.push_back(v);
                    term.beta.push_back(b.decay);
                }
            }
        }
        double lam = 0.0;
        for (double v : vals) lam += v;
        if (!(lam > 0.0)) throw ImpossibleEventError(seq.id(), i);
        term.q.resize(vals.size());
        for (std::size_t j = 0; j < vals.size(); ++j) {
            term.q[j] = vals[j] / lam;
            term.weight += term.q[j] * term.beta[j];
        }
        out.events.push_back(std::move(term));
    }
}

}  // namespace

SurrogateCoefficients surrogate_coefficients(const ModelSpec& model,
                                             const PiecewiseLinearWarp& unwarp,
                                             const EventSequence& seq) {
    SurrogateCoefficients out;
    out.landmarks.assign(unwarp.landmarks().begin(), unwarp.landmarks().end());
    out.p = warped_likelihood_parts(model, unwarp, seq).segment_masses;

    const std::vector<double> x = unwarp_times(unwarp, seq);
    if (model.is_hawkes()) {
        hawkes_event_terms(model.hawkes(), seq, x, out);
    } else {
        poisson_event_terms(model.poisson(), seq, x, out);
    }
    for (SurrogateEventTerm& term : out.events) {
        term.segment = unwarp.segment_index(term.observed_time);
    }
    return out;
}

RegularizerTerms regularizer_terms(std::span<const PiecewiseLinearWarp> unwarps,
                                   std::size_t exclude, double gamma) {
    if (exclude >= unwarps.size()) throw DataError("regularizer_terms: index out of range");
    const std::size_t segments = unwarps[exclude].segment_count();
    RegularizerTerms reg;
    reg.gamma = gamma;
    reg.sequence_count = static_cast<double>(unwarps.size());
    reg.abar.assign(segments, -1.0);
    reg.bbar.assign(segments, 0.0);
    for (std::size_t m = 0; m < unwarps.size(); ++m) {
        if (m == exclude) continue;
        if (unwarps[m].segment_count() != segments) {
            throw DataError("regularizer_terms: all unwarps must share the landmark count");
        }
        for (std::size_t l = 0; l < segments; ++l) {
            reg.abar[l] += unwarps[m].slope(l) / reg.sequence_count;
            reg.bbar[l] += unwarps[m].intercept(l) / reg.sequence_count;
        }
    }
    return reg;
}

std::vector<double> knot_increments(const PiecewiseLinearWarp& unwarp) {
    std::vector<double> d(unwarp.segment_count());
    for (std::size_t l = 0; l < d.size(); ++l) d[l] = unwarp.values()[l + 1] - unwarp.values()[l];
    return d;
}

PiecewiseLinearWarp warp_from_increments(std::span<const double> landmarks,
                                         std::span<const double> increments) {
    if (landmarks.size() != increments.size() + 1) {
        throw DataError("warp_from_increments: need one increment per landmark segment");
    }
    std::vector<double> values(landmarks.size());
    values[0] = 0.0;
    for (std::size_t l = 0; l < increments.size(); ++l) values[l + 1] = values[l] + increments[l];
    const double horizon = landmarks.back();
    if (std::abs(values.back() - horizon) > 1e-6 * horizon) {
        throw NumericError("warp increments do not sum to the horizon");
    }
    values.back() = horizon;  // absorb projection round-off
    return PiecewiseLinearWarp(std::vector<double>(landmarks.begin(), landmarks.end()),
                               std::move(values));
}

namespace {

void check_increments(const SurrogateCoefficients& coeffs, const RegularizerTerms& reg,
                      std::span<const double> d) {
    if (d.size() + 1 != coeffs.landmarks.size()) {
        throw DataError("increment vector does not match the landmark grid");
    }
    for (double v : d) {
        if (!(v > 0.0)) throw DataError("knot increments must be strictly positive");
    }
    if (reg.gamma > 0.0 && (reg.abar.size() != d.size() || reg.bbar.size() != d.size())) {
        throw DataError("regularizer terms do not match the landmark grid");
    }
}

}  // namespace

double surrogate_objective(const SurrogateCoefficients& coeffs, const RegularizerTerms& reg,
                           std::span<const double> d) {
    check_increments(coeffs, reg, d);
    const std::vector<double>& t = coeffs.landmarks;
    double obj = 0.0;
    std::vector<double> prefix(d.size() + 1, 0.0);
    for (std::size_t l = 0; l < d.size(); ++l) {
        obj += coeffs.p[l] * (t[l + 1] - t[l]) / d[l];
        prefix[l + 1] = prefix[l] + d[l];
    }
    for (const SurrogateEventTerm& e : coeffs.events) {
        const std::size_t l = e.segment;
        const double u = prefix[l] + d[l] * (e.observed_time - t[l]) / (t[l + 1] - t[l]);
        obj += e.weight * u;
    }
    if (reg.gamma > 0.0) {
        const double inv_m = 1.0 / reg.sequence_count;
        for (std::size_t l = 0; l < d.size(); ++l) {
            const double a = d[l] / (t[l + 1] - t[l]);
            const double b = prefix[l] - a * t[l];
            const double ra = a * inv_m + reg.abar[l];
            const double rb = b * inv_m + reg.bbar[l];
            obj += reg.gamma * (ra * ra + rb * rb);
        }
    }
    return obj;
}

std::vector<double> surrogate_gradient(const SurrogateCoefficients& coeffs,
                                       const RegularizerTerms& reg, std::span<const double> d) {
    check_increments(coeffs, reg, d);
    const std::vector<double>& t = coeffs.landmarks;
    const std::size_t n = d.size();
    std::vector<double> g(n, 0.0);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t l = 0; l < n; ++l) {
        g[l] -= coeffs.p[l] * (t[l + 1] - t[l]) / (d[l] * d[l]);
        prefix[l + 1] = prefix[l] + d[l];
    }

    // dU(t_i)/dd_k = 1 for k < segment(i), the in-segment fraction at k = segment(i).
    std::vector<double> seg_weight(n, 0.0), seg_frac(n, 0.0);
    for (const SurrogateEventTerm& e : coeffs.events) {
        const std::size_t l = e.segment;
        seg_weight[l] += e.weight;
        seg_frac[l] += e.weight * (e.observed_time - t[l]) / (t[l + 1] - t[l]);
    }
    double suffix = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        g[k] += suffix + seg_frac[k];
        suffix += seg_weight[k];
    }

    if (reg.gamma > 0.0) {
        const double inv_m = 1.0 / reg.sequence_count;
        std::vector<double> rb(n, 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            const double delta = t[l + 1] - t[l];
            const double a = d[l] / delta;
            const double b = prefix[l] - a * t[l];
            g[l] += 2.0 * reg.gamma * inv_m * (a * inv_m + reg.abar[l]) / delta;
            rb[l] = 2.0 * reg.gamma * inv_m * (b * inv_m + reg.bbar[l]);
        }
        double rb_suffix = 0.0;
        for (std::size_t k = n; k-- > 0;) {
            g[k] += rb_suffix - rb[k] * t[k] / (t[k + 1] - t[k]);
            rb_suffix += rb[k];
        }
    }
    return g;
}

double warp_subproblem_objective(const ModelSpec& model, const PiecewiseLinearWarp& unwarp,
                                 const RegularizerTerms& reg, const EventSequence& seq) {
    double obj = warped_neg_log_likelihood(model, unwarp, seq);
    if (reg.gamma > 0.0) {
        if (reg.abar.size() != unwarp.segment_count()) {
            throw DataError("regularizer terms do not match the unwarp grid");
        }
        const double inv_m = 1.0 / reg.sequence_count;
        for (std::size_t l = 0; l < unwarp.segment_count(); ++l) {
            const double ra = unwarp.slope(l) * inv_m + reg.abar[l];
            const double rb = unwarp.intercept(l) * inv_m + reg.bbar[l];
            obj += reg.gamma * (ra * ra + rb * rb);
        }
    }
    return obj;
}

PiecewiseLinearWarp solve_warp_subproblem(const ModelSpec& model,
                                          const PiecewiseLinearWarp& prev_unwarp,
                                          const RegularizerTerms& reg, const EventSequence& seq,
                                          const WarpSolverConfig& config) {
    const double horizon = prev_unwarp.horizon();
    const double floor_value =
        config.slope_floor_scale * horizon / static_cast<double>(prev_unwarp.landmark_count());
    const std::vector<double> landmarks(prev_unwarp.landmarks().begin(),
                                        prev_unwarp.landmarks().end());

    PiecewiseLinearWarp current = prev_unwarp;
    PiecewiseLinearWarp best = prev_unwarp;
    double best_obj = warp_subproblem_objective(model, best, reg, seq);
    double round_obj = best_obj;

    std::vector<double> d = knot_increments(current);
    for (int round = 0; round < config.inner_rounds; ++round) {
        const SurrogateCoefficients coeffs = surrogate_coefficients(model, current, seq);

        PgOptions opts;
        opts.max_iters = config.pg_iters;
        opts.armijo_c = config.armijo_c;
        opts.backtrack = config.backtrack;
        opts.value_tolerance = config.tolerance;
        PgResult res = projected_gradient_minimize(
            [&](const std::vector<double>& v) { return surrogate_objective(coeffs, reg, v); },
            [&](const std::vector<double>& v) { return surrogate_gradient(coeffs, reg, v); },
            [&](std::vector<double>& v) { project_floored_simplex(v, floor_value, horizon); },
            d, opts);

        d = std::move(res.x);
        current = warp_from_increments(landmarks, d);
        const double obj = warp_subproblem_objective(model, current, reg, seq);
        if (obj < best_obj) {
            best_obj = obj;
            best = current;
        }
        const double change = std::abs(round_obj - obj);
        round_obj = obj;
        if (change <= config.tolerance * (1.0 + std::abs(obj))) break;
    }
    return best;
}

}  // namespace ppreg
