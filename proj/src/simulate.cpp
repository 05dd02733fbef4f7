#include "ppreg/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace ppreg {

namespace {

EventSequence thin_hawkes(const HawkesParams& params, double horizon, Rng& rng,
                          const std::string& id) {
    const double rho = params.branching_spectral_radius();
    if (rho >= 1.0) {
        throw NumericError("Hawkes simulation refused: branching spectral radius " +
                           std::to_string(rho) + " >= 1 (non-stationary)");
    }
    const std::size_t c_count = params.dim();
    std::vector<Event> events;
    std::vector<double> state(c_count, 0.0);  // decayed excitation per source type
    double mu_total = 0.0;
    for (double m : params.background) mu_total += m;

    double t = 0.0;
    while (true) {
        double bound = mu_total;
        for (std::size_t c = 0; c < c_count; ++c) {
            double exc = 0.0;
            for (std::size_t cp = 0; cp < c_count; ++cp) exc += params.excitation(c, cp) * state[cp];
            bound += exc;
        }
        if (!(bound > 0.0)) break;
        const double wait = rng.exponential(bound);
        if (t + wait > horizon) break;
        t += wait;
        const double decay_factor = std::exp(-params.decay * wait);
        for (double& s : state) s *= decay_factor;

        std::vector<double> lam(c_count);
        double lam_total = 0.0;
        for (std::size_t c = 0; c < c_count; ++c) {
            double v = params.background[c];
            for (std::size_t cp = 0; cp < c_count; ++cp) v += params.excitation(c, cp) * state[cp];
            lam[c] = v;
            lam_total += v;
        }
        if (rng.uniform() * bound <= lam_total) {
            double pick = rng.uniform() * lam_total;
            std::size_t c = 0;
            while (c + 1 < c_count && pick > lam[c]) pick -= lam[c++];
            double stamp = t;
            if (!events.empty() && stamp <= events.back().time) {
                stamp = std::nextafter(events.back().time, horizon);
                if (stamp > horizon) break;
            }
            events.push_back({stamp, static_cast<int>(c)});
            state[c] += 1.0;
        }
    }
    return EventSequence(id, horizon, std::move(events));
}

EventSequence thin_poisson(const PoissonBumpModel& model, double horizon, Rng& rng,
                           const std::string& id) {
    std::vector<double> onsets;
    for (const PoissonBump& b : model.bumps) {
        for (int k = 0; k < model.replicate_count; ++k) {
            const double o = b.onset + k * model.replicate_period;
            if (o > 0.0 && o < horizon) onsets.push_back(o);
        }
    }
    std::sort(onsets.begin(), onsets.end());

    std::vector<Event> events;
    double t = 0.0;
    std::size_t next_onset = 0;
    while (t < horizon) {
        while (next_onset < onsets.size() && onsets[next_onset] <= t) ++next_onset;
        // Between activations the intensity only decays, so its value just
        // after t dominates on (t, next activation].
        const double bound = poisson_intensity(model, t);
        const double barrier = next_onset < onsets.size() ? onsets[next_onset] : horizon;
        if (!(bound > 0.0)) {
            if (barrier >= horizon) break;
            t = barrier;
            continue;
        }
        const double wait = rng.exponential(bound);
        if (t + wait > barrier) {
            if (barrier >= horizon) break;
            t = barrier;
            continue;
        }
        t += wait;
        if (rng.uniform() * bound <= poisson_intensity(model, t)) {
            double stamp = t;
            if (!events.empty() && stamp <= events.back().time) {
                stamp = std::nextafter(events.back().time, horizon);
                if (stamp > horizon) break;
            }
            events.push_back({stamp, 0});
        }
    }
    return EventSequence(id, horizon, std::move(events));
}

std::string zero_padded(int value, int width) {
    std::string s = std::to_string(value);
    while (static_cast<int>(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

}  // namespace

EventSequence simulate_thinning(const ModelSpec& model, double horizon, Rng& rng, std::string id) {
    if (!(horizon > 0.0)) throw DataError("simulation horizon must be positive");
    model.validate();
    if (model.is_hawkes()) return thin_hawkes(model.hawkes(), horizon, rng, id);
    return thin_poisson(model.poisson(), horizon, rng, id);
}

SyntheticDataset make_synthetic_dataset(const SyntheticDatasetSpec& spec) {
    if (spec.sequence_count < 1) throw DataError("sequence_count must be >= 1");
    if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0)) {
        throw DataError("train_fraction must lie in (0, 1)");
    }
    const Rng root(spec.seed);
    SyntheticDataset out;
    out.true_model = spec.model;

    const int n_train = static_cast<int>(std::lround(spec.sequence_count * spec.train_fraction));
    for (int m = 0; m < spec.sequence_count; ++m) {
        Rng stream = root.child(static_cast<std::uint64_t>(m));
        EventSequence seq = simulate_thinning(spec.model, spec.horizon, stream,
                                              "seq-" + zero_padded(m, 4));
        if (m < n_train) {
            PiecewiseLinearWarp warp =
                spec.identity_warps
                    ? PiecewiseLinearWarp::identity(spec.horizon)
                    : generate_cosine_warp(spec.warp_basis_count, spec.horizon, stream,
                                           spec.warp_resolution)
                          .warp;
            EventSequence observed = transform_sequence(warp, seq);
            out.train.push_back({std::move(observed), std::move(warp)});
        } else {
            out.test.push_back(std::move(seq));
        }
    }
    return out;
}

EventSequence stitch(std::span<const EventSequence> seqs) {
    if (seqs.size() < 2) throw DataError("stitch needs at least two sequences");
    const double horizon = seqs[0].horizon();
    std::vector<Event> events;
    for (std::size_t k = 0; k < seqs.size(); ++k) {
        if (seqs[k].horizon() != horizon) {
            throw DataError("stitch refused: sequence '" + seqs[k].id() +
                            "' has a different horizon");
        }
        const double shift = static_cast<double>(k) * horizon;
        for (const Event& e : seqs[k].events()) events.push_back({e.time + shift, e.type});
    }
    return EventSequence(seqs[0].id(), horizon * static_cast<double>(seqs.size()),
                         std::move(events));
}

PiecewiseLinearWarp stitch_warps(std::span<const PiecewiseLinearWarp> warps) {
    if (warps.size() < 2) throw DataError("stitch_warps needs at least two warps");
    const double horizon = warps[0].horizon();
    std::vector<double> landmarks{0.0}, values{0.0};
    for (std::size_t k = 0; k < warps.size(); ++k) {
        if (warps[k].horizon() != horizon) throw DataError("stitch_warps: horizons differ");
        const double shift = static_cast<double>(k) * horizon;
        for (std::size_t i = 1; i < warps[k].landmark_count(); ++i) {
            landmarks.push_back(warps[k].landmarks()[i] + shift);
            values.push_back(warps[k].values()[i] + shift);
        }
    }
    return PiecewiseLinearWarp(std::move(landmarks), std::move(values));
}

std::vector<TrainSequence> stitch_randomly(const std::vector<TrainSequence>& train, int k, Rng& rng) {
    const int m_count = static_cast<int>(train.size());
    if (k < 0) throw DataError("stitch count must be nonnegative");
    if (k == 0) return train;
    if (k >= m_count) {
        throw DataError("cannot stitch " + std::to_string(k) + " distinct partners out of " +
                        std::to_string(m_count) + " sequences");
    }
    std::vector<TrainSequence> out;
    out.reserve(train.size());
    for (int m = 0; m < m_count; ++m) {
        Rng stream = rng.child(static_cast<std::uint64_t>(m));
        // Partners sampled without replacement, excluding the sequence itself.
        std::vector<int> pool;
        pool.reserve(m_count - 1);
        for (int j = 0; j < m_count; ++j) {
            if (j != m) pool.push_back(j);
        }
        std::vector<const TrainSequence*> members{&train[static_cast<std::size_t>(m)]};
        for (int pick = 0; pick < k; ++pick) {
            const int at = stream.uniform_int(static_cast<int>(pool.size()));
            members.push_back(&train[static_cast<std::size_t>(pool[static_cast<std::size_t>(at)])]);
            pool.erase(pool.begin() + at);
        }
        std::vector<EventSequence> seqs;
        std::vector<PiecewiseLinearWarp> warps;
        for (const TrainSequence* item : members) {
            seqs.push_back(item->observed);
            warps.push_back(item->true_warp);
        }
        out.push_back({stitch(seqs), stitch_warps(warps)});
    }
    return out;
}

}  // namespace ppreg
