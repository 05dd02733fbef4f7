#include "ppreg/likelihood.hpp"

#include <cmath>

namespace ppreg {

namespace {

// (1 - exp(-z)) / z, stable for small z; equals 1 at z = 0.
double expm1_ratio(double z) {
    return z == 0.0 ? 1.0 : -std::expm1(-z) / z;
}

void hawkes_parts(const HawkesParams& params, const PiecewiseLinearWarp& unwarp,
                  const EventSequence& seq, const std::vector<double>& x,
                  WarpedLikelihood& out) {
    const std::size_t c_count = params.dim();
    const double decay = params.decay;

    std::vector<double> colsum(c_count, 0.0);  // total jump caused by a source type
    for (std::size_t c = 0; c < c_count; ++c)
        for (std::size_t cp = 0; cp < c_count; ++cp) colsum[cp] += params.excitation(c, cp);

    double mu_total = 0.0;
    for (double m : params.background) mu_total += m;

    // Sweep the unwarped timeline once, keeping the decayed excitation state
    // per source type. Events are grouped by the observed-time segment that
    // contains them, which matches their unwarped position in [v_l, v_{l+1}).
    std::vector<double> state(c_count, 0.0);
    std::size_t i = 0;
    for (std::size_t l = 0; l < unwarp.segment_count(); ++l) {
        const double v_hi = unwarp.values()[l + 1];
        double u = unwarp.values()[l];
        double mass = mu_total * (v_hi - u);
        while (i < seq.size() && unwarp.segment_index(seq[i].time) == l) {
            const double xi = x[i];
            const double gap = xi - u;
            double active = 0.0;
            for (std::size_t cp = 0; cp < c_count; ++cp) active += colsum[cp] * state[cp];
            mass += active * gap * expm1_ratio(decay * gap);
            const double decay_factor = std::exp(-decay * gap);
            for (double& s : state) s *= decay_factor;

            const std::size_t ci = static_cast<std::size_t>(seq[i].type);
            if (ci >= c_count) {
                throw DataError("sequence '" + seq.id() + "': event type " +
                                std::to_string(seq[i].type) + " out of range");
            }
            double lam = params.background[ci];
            for (std::size_t cp = 0; cp < c_count; ++cp) lam += params.excitation(ci, cp) * state[cp];
            out.event_intensities.push_back(lam);

            state[ci] += 1.0;
            u = xi;
            ++i;
        }
        const double gap = v_hi - u;
        double active = 0.0;
        for (std::size_t cp = 0; cp < c_count; ++cp) active += colsum[cp] * state[cp];
        mass += active * gap * expm1_ratio(decay * gap);
        const double decay_factor = std::exp(-decay * gap);
        for (double& s : state) s *= decay_factor;
        out.segment_masses.push_back(mass);
    }
}

void poisson_parts(const PoissonBumpModel& model, const PiecewiseLinearWarp& unwarp,
                   const EventSequence& seq, const std::vector<double>& x,
                   WarpedLikelihood& out) {
    for (std::size_t l = 0; l < unwarp.segment_count(); ++l) {
        const double v_lo = unwarp.values()[l], v_hi = unwarp.values()[l + 1];
        double mass = 0.0;
        for (const PoissonBump& b : model.bumps) {
            for (int k = 0; k < model.replicate_count; ++k) {
                const double onset = b.onset + k * model.replicate_period;
                if (onset >= v_hi) continue;
                const double lo = std::max(v_lo, onset);
                const double len = v_hi - lo;
                mass += b.amplitude * std::exp(-b.decay * (lo - onset)) * len *
                        expm1_ratio(b.decay * len);
            }
        }
        out.segment_masses.push_back(mass);
    }
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (seq[i].type != 0) {
            throw DataError("sequence '" + seq.id() + "': Poisson bump models are single-type");
        }
        out.event_intensities.push_back(poisson_intensity(model, x[i]));
    }
}

}  // namespace

std::vector<double> unwarp_times(const PiecewiseLinearWarp& unwarp, const EventSequence& seq) {
    if (seq.horizon() > unwarp.horizon()) {
        throw DataError("sequence '" + seq.id() + "' extends past the unwarp horizon");
    }
    std::vector<double> x;
    x.reserve(seq.size());
    for (const Event& e : seq.events()) x.push_back(unwarp(e.time));
    return x;
}

WarpedLikelihood warped_likelihood_parts(const ModelSpec& model,
                                         const PiecewiseLinearWarp& unwarp,
                                         const EventSequence& seq) {
    WarpedLikelihood out;
    out.segment_masses.reserve(unwarp.segment_count());
    out.event_intensities.reserve(seq.size());
    const std::vector<double> x = unwarp_times(unwarp, seq);

    if (model.is_hawkes()) {
        hawkes_parts(model.hawkes(), unwarp, seq, x, out);
    } else {
        poisson_parts(model.poisson(), unwarp, seq, x, out);
    }

    double compensator = 0.0;
    for (std::size_t l = 0; l < unwarp.segment_count(); ++l) {
        compensator += out.segment_masses[l] / unwarp.slope(l);
    }
    out.compensator = compensator;

    double log_sum = 0.0;
    for (std::size_t i = 0; i < out.event_intensities.size(); ++i) {
        const double lam = out.event_intensities[i];
        if (!(lam > 0.0)) throw ImpossibleEventError(seq.id(), i);
        log_sum += std::log(lam);
    }
    out.value = compensator - log_sum;
    return out;
}

double warped_neg_log_likelihood(const ModelSpec& model, const PiecewiseLinearWarp& unwarp,
                                 const EventSequence& seq) {
    return warped_likelihood_parts(model, unwarp, seq).value;
}

double neg_log_likelihood(const ModelSpec& model, const EventSequence& seq) {
    return warped_neg_log_likelihood(model, PiecewiseLinearWarp::identity(seq.horizon()), seq);
}

}  // namespace ppreg
