#pragma once

// Monitor-side belief Pr{X = 1 | observations} for one source.

#include <stdexcept>

#include "pulltrack/markov.hpp"

namespace pulltrack {

/// One-slot recursive update. `age_next` and `last_sample_next` are the
/// observation after the slot; an age of 1 means a fresh sample of the
/// previous slot's state arrived.
[[nodiscard]] inline double belief_step(double belief, const SourceModel& m, int age_next, Bit last_sample_next) {
    if (age_next < 1) throw std::invalid_argument("age must be at least 1");
    if (age_next == 1) {
        require_bit(last_sample_next, "last sample");
        return last_sample_next == 1 ? m.p : 1.0 - m.p;
    }
    return belief * m.p + (1.0 - belief) * (1.0 - m.p);
}

/// Belief as a function of the last sample and its age.
[[nodiscard]] inline double belief_closed_form(const SourceModel& m, Bit last_sample, int age) {
    return n_step_prob(m, last_sample, 1, age);
}

}  // namespace pulltrack
