#pragma once

#include <span>
#include <variant>
#include <vector>

#include "ppreg/types.hpp"

namespace ppreg {

/// Multivariate Hawkes process with exponential kernels:
///   lambda_c(t) = background[c] + sum_{t_i < t} excitation(c, c_i) exp(-decay (t - t_i)).
/// The decay is a fixed hyperparameter shared by all type pairs.
struct HawkesParams {
    std::vector<double> background;  // length C, >= 0
    Matrix excitation;               // C x C, >= 0; (c, c') = jump to type c from a type-c' event
    double decay = 1.0;              // > 0

    std::size_t dim() const { return background.size(); }
    void validate() const;
    /// Spectral radius of excitation/decay (the branching matrix).
    double branching_spectral_radius() const;
};

struct PoissonBump {
    double onset = 0.0;
    double decay = 0.0;      // >= 0
    double amplitude = 0.0;  // >= 0
};

/// Inhomogeneous Poisson intensity built from truncated exponential bumps:
///   lambda(t) = sum_j amplitude_j exp(-decay_j (t - onset_j)) for t >= onset_j.
/// When replicate_count > 1 every bump is repeated at onset + k*replicate_period
/// with the same amplitude (the intensity of a block-stitched realization).
struct PoissonBumpModel {
    std::vector<PoissonBump> bumps;
    double replicate_period = 0.0;
    int replicate_count = 1;

    void validate() const;
};

/// Tagged union over the supported parametric families.
class ModelSpec {
  public:
    ModelSpec() : model_(PoissonBumpModel{}) {}
    ModelSpec(HawkesParams params) : model_(std::move(params)) { validate(); }
    ModelSpec(PoissonBumpModel model) : model_(std::move(model)) { validate(); }

    bool is_hawkes() const { return std::holds_alternative<HawkesParams>(model_); }
    const HawkesParams& hawkes() const;
    const PoissonBumpModel& poisson() const;

    int type_count() const;
    void validate() const;

    /// Learnable parameters flattened to one vector: (background, excitation
    /// row-major) for Hawkes, bump amplitudes for Poisson.
    std::vector<double> learnable_parameters() const;

  private:
    std::variant<HawkesParams, PoissonBumpModel> model_;
};

/// Conditional intensity of the type-c component at time t given the history
/// prefix; events at exactly t are excluded (left-continuous convention).
double hawkes_intensity(const HawkesParams& params, std::span<const Event> history,
                        int type, double t);

double poisson_intensity(const PoissonBumpModel& model, double t);

double intensity(const ModelSpec& model, std::span<const Event> history, int type, double t);

double spectral_radius(const Matrix& m);

}  // namespace ppreg
