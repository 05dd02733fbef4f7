#include "ppreg/warp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ppreg {

PiecewiseLinearWarp::PiecewiseLinearWarp(std::vector<double> landmarks, std::vector<double> values)
    : landmarks_(std::move(landmarks)), values_(std::move(values)) {
    if (landmarks_.size() < 2 || landmarks_.size() != values_.size()) {
        throw DataError("warp needs matching landmark/value arrays of length >= 2");
    }
    if (landmarks_.front() != 0.0 || values_.front() != 0.0) {
        throw DataError("warp must map 0 to 0");
    }
    const double horizon = landmarks_.back();
    if (!(horizon > 0.0) || values_.back() != horizon) {
        throw DataError("warp must map its horizon T to T");
    }
    for (std::size_t i = 0; i + 1 < landmarks_.size(); ++i) {
        if (!(landmarks_[i + 1] > landmarks_[i])) throw DataError("warp landmarks must be strictly increasing");
        if (!(values_[i + 1] > values_[i])) throw DataError("warp values must be strictly increasing");
    }
}

PiecewiseLinearWarp PiecewiseLinearWarp::identity(double horizon, std::size_t landmark_count) {
    if (landmark_count < 2) throw DataError("identity warp needs at least 2 landmarks");
    std::vector<double> grid(landmark_count);
    for (std::size_t i = 0; i < landmark_count; ++i) {
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(landmark_count - 1);
    }
    grid.front() = 0.0;
    grid.back() = horizon;
    return PiecewiseLinearWarp(grid, grid);
}

std::size_t PiecewiseLinearWarp::segment_index(double t) const {
    auto it = std::upper_bound(landmarks_.begin(), landmarks_.end(), t);
    std::size_t idx = static_cast<std::size_t>(it - landmarks_.begin());
    if (idx == 0) return 0;
    if (idx >= landmarks_.size()) return landmarks_.size() - 2;
    return idx - 1;
}

double PiecewiseLinearWarp::operator()(double t) const {
    if (!(t >= 0.0) || t > horizon()) {
        throw DataError("warp evaluated outside [0, T]");
    }
    if (t == 0.0) return 0.0;
    if (t == horizon()) return horizon();
    const std::size_t l = segment_index(t);
    const double frac = (t - landmarks_[l]) / (landmarks_[l + 1] - landmarks_[l]);
    return values_[l] + frac * (values_[l + 1] - values_[l]);
}

PiecewiseLinearWarp PiecewiseLinearWarp::inverse() const {
    return PiecewiseLinearWarp(values_, landmarks_);
}

EventSequence transform_sequence(const PiecewiseLinearWarp& warp, const EventSequence& seq) {
    if (seq.horizon() > warp.horizon()) {
        throw DataError("sequence '" + seq.id() + "' extends past the warp horizon");
    }
    std::vector<Event> mapped;
    mapped.reserve(seq.size());
    for (const Event& e : seq.events()) mapped.push_back({warp(e.time), e.type});
    return EventSequence(seq.id(), seq.horizon(), std::move(mapped));
}

double cosine_warp_value(const CosineWarpSpec& spec, double t) {
    const double delta = spec.spacing();
    double value = 0.0;
    for (int n = 0; n < spec.basis_count; ++n) {
        const double center = n * delta;
        const double d = std::abs(t - center);
        if (d <= delta) {
            const double c = std::cos(std::numbers::pi * (t - center) / (2.0 * delta));
            value += spec.coefficients[static_cast<std::size_t>(n)] * c * c;
        }
    }
    return value;
}

GeneratedWarp generate_cosine_warp(int basis_count, double horizon, Rng& rng, int resolution) {
    if (basis_count < 3) throw DataError("cosine warp needs at least 3 basis functions");
    if (!(horizon > 0.0)) throw DataError("cosine warp needs a positive horizon");
    if (resolution < 2) throw DataError("cosine warp resolution must be >= 2");

    for (int attempt = 0; attempt < 100; ++attempt) {
        CosineWarpSpec spec;
        spec.basis_count = basis_count;
        spec.horizon = horizon;
        spec.coefficients.resize(static_cast<std::size_t>(basis_count));
        for (int n = 0; n + 1 < basis_count; ++n) {
            spec.coefficients[static_cast<std::size_t>(n)] = rng.uniform(0.0, horizon);
        }
        std::sort(spec.coefficients.begin(), spec.coefficients.end() - 1);
        spec.coefficients.front() = 0.0;
        spec.coefficients.back() = horizon;

        std::vector<double> grid(static_cast<std::size_t>(resolution) + 1);
        std::vector<double> values(grid.size());
        bool monotone = true;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            grid[k] = horizon * static_cast<double>(k) / resolution;
            values[k] = cosine_warp_value(spec, grid[k]);
            if (k > 0 && !(values[k] > values[k - 1])) monotone = false;
        }
        grid.front() = 0.0;
        grid.back() = horizon;
        values.front() = 0.0;
        values.back() = horizon;
        // Ties between sampled values have probability zero; re-draw if the
        // float grid ever produces one.
        if (!monotone) continue;
        return GeneratedWarp{PiecewiseLinearWarp(std::move(grid), std::move(values)), std::move(spec)};
    }
    throw NumericError("failed to sample a strictly monotone cosine warp");
}

double distortion(const PiecewiseLinearWarp& warp) {
    // |W(t) - t| is piecewise linear, so its sup over [0, T] sits at a knot.
    double worst = 0.0;
    for (std::size_t i = 0; i < warp.landmark_count(); ++i) {
        worst = std::max(worst, std::abs(warp.values()[i] - warp.landmarks()[i]));
    }
    return worst / warp.horizon();
}

namespace {
// Exact integral of e(s)^2 over [s0, s1] for linear e with endpoint values e0, e1.
double linear_square_integral(double s0, double s1, double e0, double e1) {
    return (s1 - s0) * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0;
}
}  // namespace

double identity_deviation(const PiecewiseLinearWarp& warp) {
    double total = 0.0;
    for (std::size_t l = 0; l < warp.segment_count(); ++l) {
        const double s0 = warp.landmarks()[l], s1 = warp.landmarks()[l + 1];
        total += linear_square_integral(s0, s1, warp.values()[l] - s0, warp.values()[l + 1] - s1);
    }
    return std::sqrt(total);
}

}  // namespace ppreg
