#pragma once

#include <span>
#include <vector>

#include "ppreg/rng.hpp"
#include "ppreg/types.hpp"

namespace ppreg {

/// Monotone piecewise-linear map of [0, T] onto itself, stored as landmark
/// times plus the map's values at the landmarks. Endpoints are pinned to 0
/// and T, values are strictly increasing, so every segment slope is positive
/// and the map is invertible. Immutable after construction.
class PiecewiseLinearWarp {
  public:
    PiecewiseLinearWarp(std::vector<double> landmarks, std::vector<double> values);

    static PiecewiseLinearWarp identity(double horizon, std::size_t landmark_count = 2);

    double horizon() const { return landmarks_.back(); }
    std::size_t landmark_count() const { return landmarks_.size(); }
    std::size_t segment_count() const { return landmarks_.size() - 1; }
    std::span<const double> landmarks() const { return landmarks_; }
    std::span<const double> values() const { return values_; }

    double slope(std::size_t segment) const {
        return (values_[segment + 1] - values_[segment]) /
               (landmarks_[segment + 1] - landmarks_[segment]);
    }
    double intercept(std::size_t segment) const {
        return values_[segment] - slope(segment) * landmarks_[segment];
    }

    /// Index of the segment containing t; the last segment is closed at T.
    std::size_t segment_index(double t) const;

    /// Evaluate the map at t in [0, T].
    double operator()(double t) const;

    PiecewiseLinearWarp inverse() const;

  private:
    std::vector<double> landmarks_;
    std::vector<double> values_;
};

/// Map every event time through the warp; types and ordering are preserved.
EventSequence transform_sequence(const PiecewiseLinearWarp& warp, const EventSequence& seq);

/// Raw coefficients of a cosine-basis warp: W(t) = sum_n coeff_n f_n(t) with
/// f_n(t) = cos^2(pi (t - t_n) / (2 spacing)) on |t - t_n| <= spacing.
struct CosineWarpSpec {
    int basis_count = 0;
    double horizon = 0.0;
    std::vector<double> coefficients;  // nondecreasing, first 0, last horizon

    double spacing() const { return horizon / (basis_count - 1); }
};

double cosine_warp_value(const CosineWarpSpec& spec, double t);

struct GeneratedWarp {
    PiecewiseLinearWarp warp;
    CosineWarpSpec spec;
};

/// Draw a random monotone warp from the cosine basis: basis_count - 1
/// coefficients uniform on [0, horizon], sorted, with the first forced to 0
/// and the last to horizon. The continuous map is sampled on a uniform grid
/// of `resolution` segments.
GeneratedWarp generate_cosine_warp(int basis_count, double horizon, Rng& rng,
                                   int resolution = 200);

/// Worst time displacement relative to the window: max_l |v_l - t_l| / T.
double distortion(const PiecewiseLinearWarp& warp);

/// L2 deviation from the identity, (integral of |W(s) - s|^2 ds)^(1/2),
/// computed exactly from the piecewise-quadratic integrand.
double identity_deviation(const PiecewiseLinearWarp& warp);

}  // namespace ppreg
