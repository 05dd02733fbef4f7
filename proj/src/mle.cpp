#include "ppreg/mle.hpp"

#include <cmath>

#include "ppreg/optim.hpp"
#include "ppreg/parallel.hpp"

namespace ppreg {

namespace {

double expm1_ratio(double z) { return z == 0.0 ? 1.0 : -std::expm1(-z) / z; }

// Integral of exp(-decay * (U(s) - shift)) ds over [lo, hi] on the observed axis.
double exp_unwarp_integral(const PiecewiseLinearWarp& unwarp, double decay,
                           double lo, double hi, double shift) {
    double total = 0.0;
    const auto landmarks = unwarp.landmarks();
    for (std::size_t l = 0; l < unwarp.segment_count(); ++l) {
        const double s0 = std::max(landmarks[l], lo);
        const double s1 = std::min(landmarks[l + 1], hi);
        if (!(s1 > s0)) continue;
        const double a = unwarp.slope(l);
        const double u0 = unwarp.values()[l] + a * (s0 - landmarks[l]);
        const double u1 = unwarp.values()[l] + a * (s1 - landmarks[l]);
        total += (s1 - s0) * std::exp(-decay * (u0 - shift)) * expm1_ratio(decay * (u1 - u0));
    }
    return total;
}

// Per-event excitation integrals entering the M-step denominators.
std::vector<double> excitation_integrals(const EventSequence& seq,
                                         const PiecewiseLinearWarp& unwarp, double decay,
                                         bool exact) {
    std::vector<double> k(seq.size());
    const double horizon = seq.horizon();
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const double ti = seq[i].time;
        if (exact) {
            k[i] = exp_unwarp_integral(unwarp, decay, ti, horizon, unwarp(ti));
        } else {
            k[i] = exp_unwarp_integral(unwarp, decay, 0.0, horizon - ti, 0.0);
        }
    }
    return k;
}

// lambda at each unwarped event, history strictly before the event.
std::vector<double> event_intensities(const HawkesParams& params, const EventSequence& unwarped) {
    const std::size_t c_count = params.dim();
    std::vector<double> state(c_count, 0.0);
    std::vector<double> lam(unwarped.size());
    double prev = 0.0;
    for (std::size_t i = 0; i < unwarped.size(); ++i) {
        const Event& e = unwarped[i];
        const double decay_factor = std::exp(-params.decay * (e.time - prev));
        for (double& s : state) s *= decay_factor;
        const std::size_t ci = static_cast<std::size_t>(e.type);
        double v = params.background[ci];
        for (std::size_t cp = 0; cp < c_count; ++cp) v += params.excitation(ci, cp) * state[cp];
        lam[i] = v;
        state[ci] += 1.0;
        prev = e.time;
    }
    return lam;
}

// The objective the EM iteration minimizes: exact event terms plus the
// compensator built from the same excitation integrals as the M-step.
double em_objective(const HawkesParams& params, std::span<const EventSequence> unwarped,
                    std::span<const std::vector<double>> integrals) {
    const std::size_t c_count = params.dim();
    std::vector<double> colsum(c_count, 0.0);
    for (std::size_t c = 0; c < c_count; ++c)
        for (std::size_t cp = 0; cp < c_count; ++cp) colsum[cp] += params.excitation(c, cp);
    double mu_total = 0.0;
    for (double m : params.background) mu_total += m;

    double nll = 0.0;
    for (std::size_t m = 0; m < unwarped.size(); ++m) {
        nll += mu_total * unwarped[m].horizon();
        const std::vector<double> lam = event_intensities(params, unwarped[m]);
        for (std::size_t i = 0; i < unwarped[m].size(); ++i) {
            nll += colsum[static_cast<std::size_t>(unwarped[m][i].type)] * integrals[m][i];
            if (!(lam[i] > 0.0)) throw ImpossibleEventError(unwarped[m].id(), i);
            nll -= std::log(lam[i]);
        }
    }
    return nll;
}

HawkesParams em_update_impl(std::span<const EmResponsibilities> resps,
                            std::span<const EventSequence> seqs,
                            std::span<const std::vector<double>> integrals,
                            const HawkesStructure& structure) {
    const std::size_t c_count = static_cast<std::size_t>(structure.type_count);
    std::vector<double> mu_num(c_count, 0.0);
    Matrix phi_num(c_count, c_count, 0.0);
    std::vector<double> denom(c_count, 0.0);
    double horizon_total = 0.0;

    for (std::size_t m = 0; m < seqs.size(); ++m) {
        const EventSequence& seq = seqs[m];
        horizon_total += seq.horizon();
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const std::size_t ci = static_cast<std::size_t>(seq[i].type);
            mu_num[ci] += resps[m].background[i];
            denom[ci] += integrals[m][i];
            for (std::size_t j = 0; j < i; ++j) {
                phi_num(ci, static_cast<std::size_t>(seq[j].type)) += resps[m].trigger[i][j];
            }
        }
    }

    HawkesParams out;
    out.decay = structure.decay;
    out.background.resize(c_count);
    out.excitation = Matrix(c_count, c_count, 0.0);
    for (std::size_t c = 0; c < c_count; ++c) out.background[c] = mu_num[c] / horizon_total;
    for (std::size_t c = 0; c < c_count; ++c) {
        for (std::size_t cp = 0; cp < c_count; ++cp) {
            out.excitation(c, cp) = denom[cp] > 0.0 ? phi_num(c, cp) / denom[cp] : 0.0;
        }
    }
    return out;
}

HawkesParams default_init(std::span<const EventSequence> seqs, const HawkesStructure& structure) {
    const std::size_t c_count = static_cast<std::size_t>(structure.type_count);
    HawkesParams init;
    init.decay = structure.decay;
    init.background.assign(c_count, 0.0);
    init.excitation = Matrix(c_count, c_count, 0.1 / static_cast<double>(c_count));
    double horizon_total = 0.0;
    for (const EventSequence& s : seqs) {
        horizon_total += s.horizon();
        for (const Event& e : s.events()) {
            if (e.type >= structure.type_count) {
                throw DataError("sequence '" + s.id() + "' uses event type " + std::to_string(e.type) +
                                " but the model has " + std::to_string(structure.type_count) + " types");
            }
            init.background[static_cast<std::size_t>(e.type)] += 1.0;
        }
    }
    for (double& b : init.background) b /= horizon_total;
    return init;
}

}  // namespace

HawkesParams hawkes_em_initialization(std::span<const EventSequence> seqs,
                                      const HawkesStructure& structure) {
    if (seqs.empty()) throw DataError("hawkes_em_initialization needs data");
    return default_init(seqs, structure);
}

EmResponsibilities em_responsibilities(const HawkesParams& params, const EventSequence& unwarped_seq) {
    const double decay = params.decay;
    EmResponsibilities resp;
    resp.background.resize(unwarped_seq.size());
    resp.trigger.resize(unwarped_seq.size());
    for (std::size_t i = 0; i < unwarped_seq.size(); ++i) {
        const Event& ei = unwarped_seq[i];
        const std::size_t ci = static_cast<std::size_t>(ei.type);
        if (ci >= params.dim()) {
            throw DataError("sequence '" + unwarped_seq.id() + "': event type out of range");
        }
        resp.trigger[i].resize(i);
        double lam = params.background[ci];
        for (std::size_t j = 0; j < i; ++j) {
            const Event& ej = unwarped_seq[j];
            const double term = params.excitation(ci, static_cast<std::size_t>(ej.type)) *
                                std::exp(-decay * (ei.time - ej.time));
            resp.trigger[i][j] = term;
            lam += term;
        }
        if (!(lam > 0.0)) throw ImpossibleEventError(unwarped_seq.id(), i);
        resp.background[i] = params.background[ci] / lam;
        for (std::size_t j = 0; j < i; ++j) resp.trigger[i][j] /= lam;
    }
    return resp;
}

double exp_compensator_integral(const PiecewiseLinearWarp& unwarp, double decay,
                                double lower, double upper) {
    if (!(lower >= 0.0) || !(upper >= lower) || upper > unwarp.horizon()) {
        throw DataError("exp_compensator_integral bounds must satisfy 0 <= lower <= upper <= T");
    }
    return exp_unwarp_integral(unwarp, decay, lower, upper, 0.0);
}

double shifted_exp_compensator_integral(const PiecewiseLinearWarp& unwarp, double decay, double from) {
    if (!(from >= 0.0) || from > unwarp.horizon()) {
        throw DataError("shifted_exp_compensator_integral start must lie in [0, T]");
    }
    return exp_unwarp_integral(unwarp, decay, from, unwarp.horizon(), unwarp(from));
}

HawkesParams em_update(std::span<const EmResponsibilities> resps,
                       std::span<const EventSequence> seqs,
                       std::span<const PiecewiseLinearWarp> unwarps,
                       const HawkesStructure& structure, bool exact_excitation) {
    if (resps.size() != seqs.size() || seqs.size() != unwarps.size() || seqs.empty()) {
        throw DataError("em_update needs matching nonempty responsibilities, sequences and unwarps");
    }
    std::vector<std::vector<double>> integrals(seqs.size());
    for (std::size_t m = 0; m < seqs.size(); ++m) {
        integrals[m] = excitation_integrals(seqs[m], unwarps[m], structure.decay, exact_excitation);
    }
    return em_update_impl(resps, seqs, integrals, structure);
}

HawkesFit fit_hawkes_mle(std::span<const EventSequence> seqs,
                         std::span<const PiecewiseLinearWarp> unwarps,
                         const HawkesStructure& structure, const MleConfig& config,
                         const std::optional<HawkesParams>& init, int threads) {
    if (seqs.empty() || seqs.size() != unwarps.size()) {
        throw DataError("fit_hawkes_mle needs a nonempty dataset with one unwarp per sequence");
    }
    std::vector<EventSequence> unwarped(seqs.size());
    std::vector<std::vector<double>> integrals(seqs.size());
    parallel_for(seqs.size(), threads, [&](std::size_t m) {
        unwarped[m] = transform_sequence(unwarps[m], seqs[m]);
        integrals[m] = excitation_integrals(seqs[m], unwarps[m], structure.decay,
                                            config.exact_excitation);
    });

    HawkesFit fit;
    fit.params = init.value_or(default_init(seqs, structure));
    fit.params.validate();
    fit.nll_trace.push_back(em_objective(fit.params, unwarped, integrals));

    std::vector<EmResponsibilities> resps(seqs.size());
    for (int it = 0; it < config.max_iters; ++it) {
        parallel_for(seqs.size(), threads, [&](std::size_t m) {
            resps[m] = em_responsibilities(fit.params, unwarped[m]);
        });
        fit.params = em_update_impl(resps, seqs, integrals, structure);
        fit.nll_trace.push_back(em_objective(fit.params, unwarped, integrals));
        const double prev = fit.nll_trace[fit.nll_trace.size() - 2];
        if (std::abs(prev - fit.nll_trace.back()) <= config.tolerance * std::abs(prev)) break;
    }
    return fit;
}

PoissonBumpModel fit_poisson_mle(std::span<const EventSequence> seqs,
                                 std::span<const PiecewiseLinearWarp> unwarps,
                                 const PoissonStructure& structure,
                                 const PoissonFitConfig& config) {
    if (seqs.empty() || seqs.size() != unwarps.size()) {
        throw DataError("fit_poisson_mle needs a nonempty dataset with one unwarp per sequence");
    }
    const std::size_t n_bumps = structure.bumps.size();
    if (n_bumps == 0) throw DataError("fit_poisson_mle needs at least one bump");

    // Per-event basis values g_ij and per-bump compensator weights E_j; both
    // are fixed while amplitudes vary.
    std::vector<std::vector<double>> basis;  // one row per event across all sequences
    std::vector<double> weight(n_bumps, 0.0);
    for (std::size_t m = 0; m < seqs.size(); ++m) {
        const EventSequence& seq = seqs[m];
        const PiecewiseLinearWarp& unwarp = unwarps[m];
        const std::vector<double> x = unwarp_times(unwarp, seq);
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::vector<double> row(n_bumps, 0.0);
            double active = 0.0;
            for (std::size_t j = 0; j < n_bumps; ++j) {
                const PoissonBump& b = structure.bumps[j];
                for (int k = 0; k < structure.replicate_count; ++k) {
                    const double onset = b.onset + k * structure.replicate_period;
                    if (x[i] >= onset) row[j] += std::exp(-b.decay * (x[i] - onset));
                }
                active += row[j];
            }
            if (!(active > 0.0)) throw ImpossibleEventError(seq.id(), i);
            basis.push_back(std::move(row));
        }
        for (std::size_t j = 0; j < n_bumps; ++j) {
            const PoissonBump& b = structure.bumps[j];
            for (std::size_t l = 0; l < unwarp.segment_count(); ++l) {
                const double v_lo = unwarp.values()[l], v_hi = unwarp.values()[l + 1];
                double mass = 0.0;
                for (int k = 0; k < structure.replicate_count; ++k) {
                    const double onset = b.onset + k * structure.replicate_period;
                    if (onset >= v_hi) continue;
                    const double lo = std::max(v_lo, onset);
                    const double len = v_hi - lo;
                    mass += std::exp(-b.decay * (lo - onset)) * len * expm1_ratio(b.decay * len);
                }
                weight[j] += mass / unwarp.slope(l);
            }
        }
    }

    auto lambda_at = [&](const std::vector<double>& alpha, const std::vector<double>& row) {
        double lam = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) lam += alpha[j] * row[j];
        return lam;
    };
    auto objective = [&](const std::vector<double>& alpha) {
        double f = 0.0;
        for (std::size_t j = 0; j < n_bumps; ++j) f += alpha[j] * weight[j];
        for (const std::vector<double>& row : basis) {
            const double lam = lambda_at(alpha, row);
            if (!(lam > 0.0)) return std::numeric_limits<double>::infinity();
            f -= std::log(lam);
        }
        return f;
    };
    auto gradient = [&](const std::vector<double>& alpha) {
        std::vector<double> g(weight);
        for (const std::vector<double>& row : basis) {
            const double lam = lambda_at(alpha, row);
            for (std::size_t j = 0; j < n_bumps; ++j) g[j] -= row[j] / lam;
        }
        return g;
    };
    auto project = [](std::vector<double>& alpha) {
        for (double& a : alpha) a = std::max(a, 0.0);
    };

    double horizon_total = 0.0;
    for (const EventSequence& s : seqs) horizon_total += s.horizon();
    std::vector<double> alpha0(n_bumps,
                               std::max(1e-12, static_cast<double>(basis.size()) /
                                                   (static_cast<double>(n_bumps) * horizon_total)));

    PgOptions opts;
    opts.max_iters = config.max_iters;
    {
        std::vector<double> g0 = gradient(alpha0);
        std::vector<double> probe = alpha0;
        for (std::size_t j = 0; j < n_bumps; ++j) probe[j] -= g0[j];
        project(probe);
        double stat0 = 0.0;
        for (std::size_t j = 0; j < n_bumps; ++j) stat0 = std::max(stat0, std::abs(probe[j] - alpha0[j]));
        opts.grad_tolerance = config.gradient_tolerance * std::max(1.0, stat0);
    }
    PgResult res = projected_gradient_minimize(objective, gradient, project, alpha0, opts);

    PoissonBumpModel out;
    out.bumps = structure.bumps;
    out.replicate_period = structure.replicate_period;
    out.replicate_count = structure.replicate_count;
    for (std::size_t j = 0; j < n_bumps; ++j) out.bumps[j].amplitude = res.x[j];
    return out;
}

}  // namespace ppreg
