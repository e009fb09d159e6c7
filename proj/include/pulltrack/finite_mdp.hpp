#pragma once

// Finite average-cost MDP with sparse transition rows.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pulltrack {

struct Transition {
    std::size_t next = 0;
    double prob = 0.0;
};

/// Deterministic stationary policy: one action index per state.
using Policy = std::vector<int>;

class FiniteMdp {
public:
    FiniteMdp() = default;
    FiniteMdp(std::size_t n_states, std::size_t n_actions)
        : n_states_(n_states), n_actions_(n_actions), rows_(n_states * n_actions), cost_(n_states * n_actions, 0.0) {
        if (n_states == 0 || n_actions == 0) throw std::invalid_argument("MDP needs at least one state and one action");
    }

    [[nodiscard]] std::size_t n_states() const noexcept { return n_states_; }
    [[nodiscard]] std::size_t n_actions() const noexcept { return n_actions_; }

    [[nodiscard]] std::span<const Transition> row(std::size_t s, std::size_t a) const { return rows_[slot(s, a)]; }
    [[nodiscard]] double cost(std::size_t s, std::size_t a) const { return cost_[slot(s, a)]; }

    /// Adds probability mass to (s, a) -> next, merging with an existing entry.
    void add_transition(std::size_t s, std::size_t a, std::size_t next, double prob) {
        if (next >= n_states_) throw std::out_of_range("next state out of range");
        if (prob == 0.0) return;
        auto& r = rows_[slot(s, a)];
        for (auto& t : r) {
            if (t.next == next) {
                t.prob += prob;
                return;
            }
        }
        r.push_back({next, prob});
    }

    void set_row(std::size_t s, std::size_t a, std::vector<Transition> row) {
        for (const auto& t : row)
            if (t.next >= n_states_) throw std::out_of_range("next state out of range");
        rows_[slot(s, a)] = std::move(row);
    }

    void set_cost(std::size_t s, std::size_t a, double c) { cost_[slot(s, a)] = c; }

    /// Replaces the whole cost table, laid out as [state * n_actions + action].
    void set_costs(std::vector<double> costs) {
        if (costs.size() != cost_.size()) throw std::invalid_argument("cost table size mismatch");
        cost_ = std::move(costs);
    }
    [[nodiscard]] const std::vector<double>& costs() const noexcept { return cost_; }

    /// Largest |sum of row - 1| over all (state, action) rows.
    [[nodiscard]] double max_row_sum_error() const {
        double worst = 0.0;
        for (const auto& r : rows_) {
            double sum = 0.0;
            for (const auto& t : r) sum += t.prob;
            worst = std::max(worst, std::abs(sum - 1.0));
        }
        return worst;
    }

    void validate(double tol = 1e-12) const {
        for (const auto& r : rows_)
            for (const auto& t : r)
                if (!(t.prob >= 0.0)) throw std::invalid_argument("negative transition probability");
        for (double c : cost_)
            if (!std::isfinite(c)) throw std::invalid_argument("non-finite cost");
        if (const double err = max_row_sum_error(); err > tol)
            throw std::invalid_argument("transition row sums deviate from 1 by " + std::to_string(err));
    }

    void validate_policy(const Policy& policy) const {
        if (policy.size() != n_states_) throw std::invalid_argument("policy size does not match state count");
        for (int a : policy)
            if (a < 0 || static_cast<std::size_t>(a) >= n_actions_) throw std::invalid_argument("policy action out of range");
    }

private:
    [[nodiscard]] std::size_t slot(std::size_t s, std::size_t a) const {
        if (s >= n_states_ || a >= n_actions_) throw std::out_of_range("state or action out of range");
        return s * n_actions_ + a;
    }

    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<std::vector<Transition>> rows_;
    std::vector<double> cost_;
};

}  // namespace pulltrack
