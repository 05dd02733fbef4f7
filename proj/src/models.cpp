#include "ppreg/models.hpp"

#include <algorithm>
#include <cmath>

namespace ppreg {

void HawkesParams::validate() const {
    const std::size_t c = background.size();
    if (c == 0) throw DataError("Hawkes model needs at least one event type");
    if (excitation.rows() != c || excitation.cols() != c) {
        throw DataError("Hawkes excitation matrix shape does not match the background vector");
    }
    if (!(decay > 0.0) || !std::isfinite(decay)) throw DataError("Hawkes decay must be positive");
    for (double m : background) {
        if (!(m >= 0.0) || !std::isfinite(m)) throw DataError("Hawkes background rates must be nonnegative");
    }
    for (double p : excitation.data()) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw DataError("Hawkes excitation must be nonnegative");
    }
}

double spectral_radius(const Matrix& m) {
    const std::size_t n = m.rows();
    if (n == 0) return 0.0;
    if (n == 1) return std::abs(m(0, 0));
    // Power iteration; fine for nonnegative matrices of the sizes used here.
    std::vector<double> v(n, 1.0), w(n, 0.0);
    double rho = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += m(i, j) * v[j];
            w[i] = s;
        }
        double norm = 0.0;
        for (double x : w) norm = std::max(norm, std::abs(x));
        if (norm == 0.0) return 0.0;
        double prev = rho;
        rho = norm;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
        if (it > 10 && std::abs(rho - prev) <= 1e-13 * rho) break;
    }
    return rho;
}

double HawkesParams::branching_spectral_radius() const {
    Matrix b(excitation.rows(), excitation.cols());
    for (std::size_t i = 0; i < excitation.rows(); ++i)
        for (std::size_t j = 0; j < excitation.cols(); ++j) b(i, j) = excitation(i, j) / decay;
    return spectral_radius(b);
}

void PoissonBumpModel::validate() const {
    if (bumps.empty()) throw DataError("Poisson bump model needs at least one bump");
    for (const PoissonBump& b : bumps) {
        if (!(b.decay >= 0.0) || !(b.amplitude >= 0.0) || !std::isfinite(b.onset)) {
            throw DataError("Poisson bump parameters must be finite with nonnegative decay and amplitude");
        }
    }
    if (replicate_count < 1) throw DataError("replicate_count must be >= 1");
    if (replicate_count > 1 && !(replicate_period > 0.0)) {
        throw DataError("replicated bumps need a positive replicate_period");
    }
}

const HawkesParams& ModelSpec::hawkes() const {
    if (!is_hawkes()) throw DataError("model is not a Hawkes process");
    return std::get<HawkesParams>(model_);
}

const PoissonBumpModel& ModelSpec::poisson() const {
    if (is_hawkes()) throw DataError("model is not a Poisson bump model");
    return std::get<PoissonBumpModel>(model_);
}

int ModelSpec::type_count() const {
    return is_hawkes() ? static_cast<int>(hawkes().dim()) : 1;
}

void ModelSpec::validate() const {
    std::visit([](const auto& m) { m.validate(); }, model_);
}

std::vector<double> ModelSpec::learnable_parameters() const {
    std::vector<double> out;
    if (is_hawkes()) {
        const HawkesParams& h = hawkes();
        out.assign(h.background.begin(), h.background.end());
        out.insert(out.end(), h.excitation.data().begin(), h.excitation.data().end());
    } else {
        for (const PoissonBump& b : poisson().bumps) out.push_back(b.amplitude);
    }
    return out;
}

double hawkes_intensity(const HawkesParams& params, std::span<const Event> history,
                        int type, double t) {
    if (type < 0 || static_cast<std::size_t>(type) >= params.dim()) {
        throw DataError("event type " + std::to_string(type) + " out of range for a " +
                        std::to_string(params.dim()) + "-type Hawkes model");
    }
    double lam = params.background[static_cast<std::size_t>(type)];
    for (const Event& e : history) {
        if (!(e.time < t)) break;
        lam += params.excitation(static_cast<std::size_t>(type), static_cast<std::size_t>(e.type)) *
               std::exp(-params.decay * (t - e.time));
    }
    return lam;
}

double poisson_intensity(const PoissonBumpModel& model, double t) {
    double lam = 0.0;
    for (const PoissonBump& b : model.bumps) {
        for (int k = 0; k < model.replicate_count; ++k) {
            const double onset = b.onset + k * model.replicate_period;
            if (t >= onset) lam += b.amplitude * std::exp(-b.decay * (t - onset));
        }
    }
    return lam;
}

double intensity(const ModelSpec& model, std::span<const Event> history, int type, double t) {
    if (model.is_hawkes()) return hawkes_intensity(model.hawkes(), history, type, t);
    if (type != 0) throw DataError("Poisson bump models have a single event type");
    return poisson_intensity(model.poisson(), t);
}

}  // namespace ppreg
