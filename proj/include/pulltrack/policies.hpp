#pragma once

// Monitor command policies over the observable tracking state.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pulltrack/markov.hpp"
#include "pulltrack/solver.hpp"
#include "pulltrack/tracking_model.hpp"

namespace pulltrack {

enum class PolicyKind { optimal_rvia, age_optimal_rvia, max_age_first, always_idle, uniform_random };

inline constexpr std::array<PolicyKind, 5> all_policy_kinds{PolicyKind::optimal_rvia, PolicyKind::age_optimal_rvia,
                                                            PolicyKind::max_age_first, PolicyKind::always_idle,
                                                            PolicyKind::uniform_random};

inline std::string_view to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::optimal_rvia: return "optimal_rvia";
        case PolicyKind::age_optimal_rvia: return "age_optimal_rvia";
        case PolicyKind::max_age_first: return "max_age_first";
        case PolicyKind::always_idle: return "always_idle";
        case PolicyKind::uniform_random: return "uniform_random";
    }
    return "unknown";
}

inline std::optional<PolicyKind> parse_policy_kind(std::string_view name) {
    for (PolicyKind k : all_policy_kinds)
        if (to_string(k) == name) return k;
    return std::nullopt;
}

[[nodiscard]] constexpr bool needs_table(PolicyKind k) noexcept {
    return k == PolicyKind::optimal_rvia || k == PolicyKind::age_optimal_rvia;
}

class MissingTable : public std::invalid_argument {
public:
    MissingTable() : std::invalid_argument("policy kind requires a solved policy table") {}
};

class MissingRng : public std::invalid_argument {
public:
    MissingRng() : std::invalid_argument("policy kind requires a random stream") {}
};

/// Truncation depth implied by a table over 4N^2 states.
inline int table_depth(const PolicyTable& table) {
    const auto n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(table.actions.size()) / 4.0)));
    if (n < 1 || static_cast<std::size_t>(4 * n * n) != table.actions.size())
        throw std::invalid_argument("policy table size is not 4N^2");
    return n;
}

/// Pulls the sensor whose source has the larger weighted age; ties go to sensor 1.
[[nodiscard]] inline Action max_age_first(const TrackingState& s, const std::array<double, 2>& weights) {
    return weights[1] * s.age[1] > weights[0] * s.age[0] ? Action::pull2 : Action::pull1;
}

inline Action decide(PolicyKind kind, const TrackingState& s, const PolicyTable* table,
                     const std::array<double, 2>& weights, Rng* rng) {
    switch (kind) {
        case PolicyKind::always_idle: return Action::idle;
        case PolicyKind::max_age_first: return max_age_first(s, weights);
        case PolicyKind::uniform_random: {
            if (rng == nullptr) throw MissingRng();
            const auto r = static_cast<int>(uniform01(*rng) * 3.0);
            return static_cast<Action>(r < 3 ? r : 2);
        }
        case PolicyKind::optimal_rvia:
        case PolicyKind::age_optimal_rvia: {
            if (table == nullptr) throw MissingTable();
            const StateSpace space(table_depth(*table));
            return static_cast<Action>(table->actions[space.index(s)]);
        }
    }
    throw std::invalid_argument("unknown policy kind");
}

/// A policy ready to run: its kind, the solved table when it needs one, and
/// the weights used by max-age-first.
struct PolicySpec {
    PolicyKind kind = PolicyKind::always_idle;
    std::optional<PolicyTable> table;
    std::array<double, 2> weights{1.0, 1.0};

    [[nodiscard]] Action decide(const TrackingState& s, Rng* rng) const {
        return pulltrack::decide(kind, s, table ? &*table : nullptr, weights, rng);
    }

    /// The action every state maps to, as a dense policy over the state space.
    /// Not defined for uniform_random.
    [[nodiscard]] Policy as_policy(const StateSpace& space) const {
        if (kind == PolicyKind::uniform_random) throw std::invalid_argument("uniform_random is not deterministic");
        Policy out(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) out[i] = static_cast<int>(decide(space.state(i), nullptr));
        return out;
    }
};

/// Distortion-optimal table for the given scenario.
inline PolicyTable solve_optimal(const SystemParams& params, const RviaOptions& opt = {}) {
    return rvia(build_tracking_mdp(params, CostModel::distortion), opt);
}

/// Table minimizing weighted age plus transmission cost on the same kernel.
inline PolicyTable solve_age_optimal(const SystemParams& params, const RviaOptions& opt = {}) {
    return rvia(build_tracking_mdp(params, CostModel::age), opt);
}

/// Builds a runnable policy, solving the MDP when the kind is table-backed.
inline PolicySpec make_policy(PolicyKind kind, const SystemParams& params, const RviaOptions& opt = {}) {
    PolicySpec spec{kind, std::nullopt, params.w};
    if (kind == PolicyKind::optimal_rvia) spec.table = solve_optimal(params, opt);
    if (kind == PolicyKind::age_optimal_rvia) spec.table = solve_age_optimal(params, opt);
    return spec;
}

}  // namespace pulltrack
