#pragma once

// Truncated belief MDP for two sources observed through pulled, possibly
// correlated sensor reports. A state is the last sample and its age for each
// source; ages saturate at the truncation depth N.

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "pulltrack/belief.hpp"
#include "pulltrack/distortion.hpp"
#include "pulltrack/finite_mdp.hpp"
#include "pulltrack/markov.hpp"

namespace pulltrack {

/// Monitor command. Sensor k observes source k.
enum class Action : int { idle = 0, pull1 = 1, pull2 = 2 };

inline constexpr std::size_t n_actions = 3;

/// Full scenario description. Index 0 refers to source/sensor 1, index 1 to 2.
struct SystemParams {
    std::array<SourceModel, 2> sources{SourceModel{0.5, 1}, SourceModel{0.5, 2}};
    /// Reception success probability of each sensor.
    std::array<double, 2> q{1.0, 1.0};
    /// rho12: a report from sensor 1 also carries source 2. rho21 the reverse.
    double rho12 = 0.0;
    double rho21 = 0.0;
    std::array<double, 2> w{1.0, 1.0};
    double alpha = 0.0;
    std::array<DistortionMatrix, 2> distortions{presets::real_time_error(), presets::real_time_error()};
    int N = 30;

    /// Probability that a successful report from `sensor` also carries the other source.
    [[nodiscard]] double cross_prob(std::size_t sensor) const { return sensor == 0 ? rho12 : rho21; }

    void validate() const {
        for (const auto& s : sources) s.validate();
        require_probability(q[0], "q1");
        require_probability(q[1], "q2");
        require_probability(rho12, "rho12");
        require_probability(rho21, "rho21");
        for (double wi : w)
            if (!(wi >= 0.0) || !std::isfinite(wi)) throw std::invalid_argument("weights must be finite and non-negative");
        if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite and non-negative");
        for (const auto& d : distortions) d.validate();
        if (N < 2) throw std::invalid_argument("truncation depth N must be at least 2");
    }
};

/// Sources whose belief has not settled near 1/2 by age N: |2p-1|^N > 0.05.
inline std::vector<std::string> truncation_warnings(const SystemParams& params) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < 2; ++i) {
        const double residual = std::pow(std::abs(params.sources[i].mixing_factor()), params.N);
        if (residual > 0.05)
            out.push_back("source " + std::to_string(i + 1) + ": |2p-1|^N = " + std::to_string(residual) +
                          " exceeds 0.05; increase N");
    }
    return out;
}

struct TrackingState {
    std::array<Bit, 2> xbar{0, 0};
    std::array<int, 2> age{1, 1};

    friend auto operator<=>(const TrackingState&, const TrackingState&) = default;
};

/// Bijection between TrackingState and [0, 4N^2), lexicographic in
/// (xbar1, xbar2, age1, age2). Index 0 is (0, 0, 1, 1).
class StateSpace {
public:
    explicit StateSpace(int depth) : n_(depth) {
        if (depth < 1) throw std::invalid_argument("truncation depth must be positive");
    }

    [[nodiscard]] int depth() const noexcept { return n_; }
    [[nodiscard]] std::size_t size() const noexcept { return 4u * static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_); }

    [[nodiscard]] std::size_t index(const TrackingState& s) const {
        for (std::size_t i = 0; i < 2; ++i) {
            require_bit(s.xbar[i], "last sample");
            if (s.age[i] < 1 || s.age[i] > n_) throw std::out_of_range("age outside [1, N]");
        }
        const auto n = static_cast<std::size_t>(n_);
        return ((static_cast<std::size_t>(s.xbar[0]) * 2 + static_cast<std::size_t>(s.xbar[1])) * n +
                static_cast<std::size_t>(s.age[0] - 1)) * n + static_cast<std::size_t>(s.age[1] - 1);
    }

    [[nodiscard]] TrackingState state(std::size_t idx) const {
        if (idx >= size()) throw std::out_of_range("state index out of range");
        const auto n = static_cast<std::size_t>(n_);
        TrackingState s;
        s.age[1] = static_cast<int>(idx % n) + 1;
        idx /= n;
        s.age[0] = static_cast<int>(idx % n) + 1;
        idx /= n;
        s.xbar[1] = static_cast<Bit>(idx % 2);
        s.xbar[0] = static_cast<Bit>(idx / 2);
        return s;
    }

    [[nodiscard]] int saturate(int age) const noexcept { return age < n_ ? age : n_; }

    /// Point mass on one state.
    [[nodiscard]] std::vector<double> point_mass(const TrackingState& s) const {
        std::vector<double> mu(size(), 0.0);
        mu[index(s)] = 1.0;
        return mu;
    }

    /// Both samples fresh (age 1) with the four sample combinations equally likely.
    [[nodiscard]] std::vector<double> fresh_uniform() const {
        std::vector<double> mu(size(), 0.0);
        for (Bit a : {0, 1})
            for (Bit b : {0, 1}) mu[index({{a, b}, {1, 1}})] = 0.25;
        return mu;
    }

private:
    int n_;
};

inline std::vector<TrackingState> enumerate_states(const SystemParams& params) {
    const StateSpace space(params.N);
    std::vector<TrackingState> out;
    out.reserve(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) out.push_back(space.state(i));
    return out;
}

/// Pr{X_i = 1 | s} for source index i in {0, 1}.
[[nodiscard]] inline double conditional_state_prob(const SystemParams& params, const TrackingState& s, std::size_t i) {
    return belief_closed_form(params.sources.at(i), s.xbar[i], s.age[i]);
}

struct Outcome {
    TrackingState next;
    double prob = 0.0;
};

/// Next observable state given the action and hypothesized current source
/// states (x1, x2). Zero-probability branches are omitted.
inline std::vector<Outcome> observation_kernel(const SystemParams& params, const TrackingState& s, Action a, Bit x1,
                                               Bit x2) {
    require_bit(x1, "x1");
    require_bit(x2, "x2");
    const StateSpace space(params.N);
    TrackingState aged = s;
    for (auto& d : aged.age) d = space.saturate(d + 1);

    std::vector<Outcome> out;
    if (a == Action::idle) {
        out.push_back({aged, 1.0});
        return out;
    }
    const std::size_t k = a == Action::pull1 ? 0 : 1;
    const std::array<Bit, 2> x{x1, x2};
    const double q = params.q[k];
    const double rho = params.cross_prob(k);

    TrackingState both{{x1, x2}, {1, 1}};
    TrackingState own = aged;
    own.xbar[k] = x[k];
    own.age[k] = 1;

    const std::array<Outcome, 3> branches{Outcome{aged, 1.0 - q}, Outcome{both, q * rho}, Outcome{own, q * (1.0 - rho)}};
    for (const auto& b : branches)
        if (b.prob > 0.0) out.push_back(b);
    return out;
}

/// Transition kernel of the truncated MDP with an all-zero cost table. The
/// current source states are marginalized with the closed-form beliefs.
inline FiniteMdp build_kernel(const SystemParams& params) {
    params.validate();
    const StateSpace space(params.N);
    FiniteMdp mdp(space.size(), n_actions);
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
        const TrackingState s = space.state(idx);
        const std::array<double, 2> b{conditional_state_prob(params, s, 0), conditional_state_prob(params, s, 1)};
        for (std::size_t a = 0; a < n_actions; ++a) {
            if (a == 0) {
                for (const auto& o : observation_kernel(params, s, Action::idle, 0, 0))
                    mdp.add_transition(idx, a, space.index(o.next), o.prob);
                continue;
            }
            for (Bit x1 : {0, 1}) {
                const double p1 = x1 == 1 ? b[0] : 1.0 - b[0];
                if (p1 == 0.0) continue;
                for (Bit x2 : {0, 1}) {
                    const double p2 = x2 == 1 ? b[1] : 1.0 - b[1];
                    if (p2 == 0.0) continue;
                    for (const auto& o : observation_kernel(params, s, static_cast<Action>(a), x1, x2))
                        mdp.add_transition(idx, a, space.index(o.next), p1 * p2 * o.prob);
                }
            }
        }
    }
    return mdp;
}

/// Expected weighted distortion of the minimum mean distortion estimates in s.
[[nodiscard]] inline double expected_state_distortion(const SystemParams& params, const TrackingState& s) {
    double total = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        total += params.w[i] * min_expected_distortion(params.distortions[i], conditional_state_prob(params, s, i));
    return total;
}

/// Cost table [state * 3 + action]: expected distortion plus alpha per pull.
inline std::vector<double> build_cost(const SystemParams& params) {
    params.validate();
    const StateSpace space(params.N);
    std::vector<double> cost(space.size() * n_actions);
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
        const double d = expected_state_distortion(params, space.state(idx));
        cost[idx * n_actions + 0] = d;
        cost[idx * n_actions + 1] = d + params.alpha;
        cost[idx * n_actions + 2] = d + params.alpha;
    }
    return cost;
}

/// Cost table where the distortion of each source is replaced by its age.
inline std::vector<double> build_age_cost(const SystemParams& params) {
    params.validate();
    const StateSpace space(params.N);
    std::vector<double> cost(space.size() * n_actions);
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
        const TrackingState s = space.state(idx);
        const double d = params.w[0] * s.age[0] + params.w[1] * s.age[1];
        cost[idx * n_actions + 0] = d;
        cost[idx * n_actions + 1] = d + params.alpha;
        cost[idx * n_actions + 2] = d + params.alpha;
    }
    return cost;
}

enum class CostModel { distortion, age };

inline FiniteMdp build_tracking_mdp(const SystemParams& params, CostModel model = CostModel::distortion) {
    FiniteMdp mdp = build_kernel(params);
    mdp.set_costs(model == CostModel::distortion ? build_cost(params) : build_age_cost(params));
    return mdp;
}

}  // namespace pulltrack
