#include "ppreg/types.hpp"

#include <cmath>

namespace ppreg {

ImpossibleEventError::ImpossibleEventError(std::string seq_id, std::size_t index)
    : NumericError("model assigns zero intensity to event " + std::to_string(index) +
                   " of sequence '" + seq_id + "'"),
      sequence_id(std::move(seq_id)),
      event_index(index) {}

EventSequence::EventSequence(std::string id, double horizon, std::vector<Event> events)
    : id_(std::move(id)), horizon_(horizon), events_(std::move(events)) {
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
        throw DataError("sequence '" + id_ + "': horizon must be positive and finite");
    }
    double prev = -1.0;
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const Event& e = events_[i];
        if (!std::isfinite(e.time) || e.time < 0.0 || e.time > horizon_) {
            throw DataError("sequence '" + id_ + "': event " + std::to_string(i) +
                            " lies outside [0, horizon]");
        }
        if (i > 0 && !(e.time > prev)) {
            throw DataError("sequence '" + id_ + "': event times must be strictly increasing (index " +
                            std::to_string(i) + ")");
        }
        if (e.type < 0) {
            throw DataError("sequence '" + id_ + "': negative event type at index " + std::to_string(i));
        }
        prev = e.time;
    }
}

}  // namespace ppreg
