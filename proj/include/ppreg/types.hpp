#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppreg {

/// Malformed or inconsistent input data (files, configs, shape mismatches).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Failure of a numerical procedure (degenerate likelihood, divergence, ...).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A model assigned zero intensity to an observed event.
struct ImpossibleEventError : NumericError {
    ImpossibleEventError(std::string sequence_id, std::size_t event_index);
    std::string sequence_id;
    std::size_t event_index;
};

struct Event {
    double time = 0.0;
    int type = 0;  // zero-based
};

/// Ordered marked events on [0, horizon]. Times are strictly increasing and
/// stay within the observation window; types are zero-based indices into the
/// model's type set. Immutable after construction.
class EventSequence {
  public:
    EventSequence() = default;
    EventSequence(std::string id, double horizon, std::vector<Event> events);

    const std::string& id() const { return id_; }
    double horizon() const { return horizon_; }
    std::span<const Event> events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }
    const Event& operator[](std::size_t i) const { return events_[i]; }

  private:
    std::string id_;
    double horizon_ = 1.0;
    std::vector<Event> events_;
};

/// Dense row-major matrix, just large enough for small type-count models.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

  private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

}  // namespace ppreg
