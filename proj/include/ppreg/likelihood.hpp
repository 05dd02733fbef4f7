#pragma once

#include <vector>

#include "ppreg/models.hpp"
#include "ppreg/warp.hpp"

namespace ppreg {

/// Pieces of the warped negative log-likelihood of one sequence.
/// segment_masses[l] is the compensator mass of unwarp segment l,
///   sum_c integral of lambda_c(u) du over [U(t_l), U(t_{l+1})],
/// evaluated with the unwarped event history; the total compensator is
/// sum_l segment_masses[l] / slope_l (change of variables through the warp).
struct WarpedLikelihood {
    double value = 0.0;        // negative log-likelihood
    double compensator = 0.0;  // sum_c integral_0^T lambda_c(U(s)) ds
    std::vector<double> segment_masses;
    std::vector<double> event_intensities;  // lambda_{c_i}(U(t_i)), history excluded at t
};

/// Unwarped event times U(t_i), evaluated segment-consistently.
std::vector<double> unwarp_times(const PiecewiseLinearWarp& unwarp, const EventSequence& seq);

WarpedLikelihood warped_likelihood_parts(const ModelSpec& model,
                                         const PiecewiseLinearWarp& unwarp,
                                         const EventSequence& seq);

/// Exact negative log-likelihood on the observed timeline; compensator
/// integrals are closed-form (exponential kernels integrate analytically).
double neg_log_likelihood(const ModelSpec& model, const EventSequence& seq);

/// Negative log-likelihood of the unwarped sequence W^{-1}(S); equals
/// neg_log_likelihood exactly when the unwarp is the trivial identity.
double warped_neg_log_likelihood(const ModelSpec& model, const PiecewiseLinearWarp& unwarp,
                                 const EventSequence& seq);

}  // namespace ppreg
