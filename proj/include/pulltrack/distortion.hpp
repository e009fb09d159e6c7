#pragma once

// Distortion functions f(x, x_hat) over binary states and the minimum mean
// distortion estimator built on them.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pulltrack/markov.hpp"

namespace pulltrack {

/// 2x2 penalty table. Rows index the actual state x, columns the estimate
/// x_hat, so entries[1][0] is the penalty for missing a 1.
struct DistortionMatrix {
    std::array<std::array<double, 2>, 2> entries{};

    [[nodiscard]] double operator()(Bit actual, Bit estimate) const {
        return entries[static_cast<std::size_t>(actual)][static_cast<std::size_t>(estimate)];
    }

    void validate() const {
        for (const auto& row : entries)
            for (double v : row)
                if (!std::isfinite(v) || v < 0.0)
                    throw std::invalid_argument("distortion entries must be finite and non-negative");
    }

    [[nodiscard]] double max_entry() const {
        return std::max({entries[0][0], entries[0][1], entries[1][0], entries[1][1]});
    }

    [[nodiscard]] DistortionMatrix transposed() const {
        return {{{{entries[0][0], entries[1][0]}, {entries[0][1], entries[1][1]}}}};
    }

    friend bool operator==(const DistortionMatrix&, const DistortionMatrix&) = default;
};

namespace presets {

/// 0/1 loss: one unit whenever the estimate is wrong.
inline DistortionMatrix real_time_error() { return {{{{0.0, 1.0}, {1.0, 0.0}}}}; }

/// Asymmetric pair used in the correlation experiment.
inline DistortionMatrix asym_d1() { return {{{{0.0, 3.0}, {1.0, 0.0}}}}; }
inline DistortionMatrix asym_d2() { return {{{{0.0, 1.0}, {5.0, 0.0}}}}; }

}  // namespace presets

/// Looks up a named preset: "real_time_error", "asym_d1" or "asym_d2".
inline std::optional<DistortionMatrix> distortion_preset(std::string_view name) {
    if (name == "real_time_error") return presets::real_time_error();
    if (name == "asym_d1") return presets::asym_d1();
    if (name == "asym_d2") return presets::asym_d2();
    return std::nullopt;
}

/// E[f(X, estimate)] when Pr{X = 1} = belief.
[[nodiscard]] inline double expected_distortion(const DistortionMatrix& f, double belief, Bit estimate) {
    return belief * f(1, estimate) + (1.0 - belief) * f(0, estimate);
}

/// Estimate minimizing expected distortion. Ties resolve to 0.
[[nodiscard]] inline Bit mmd_estimate(const DistortionMatrix& f, double belief) {
    return expected_distortion(f, belief, 1) < expected_distortion(f, belief, 0) ? 1 : 0;
}

/// Expected distortion of the minimum mean distortion estimate.
[[nodiscard]] inline double min_expected_distortion(const DistortionMatrix& f, double belief) {
    return std::min(expected_distortion(f, belief, 0), expected_distortion(f, belief, 1));
}

}  // namespace pulltrack
