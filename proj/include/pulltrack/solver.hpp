#pragma once

// Average-cost solvers for FiniteMdp: relative value iteration, exact policy
// evaluation through the stationary distribution, a Bellman optimality
// certificate and an exhaustive policy-enumeration oracle for tiny models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "pulltrack/finite_mdp.hpp"

namespace pulltrack {

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(double residual, std::size_t iterations)
        : std::runtime_error("relative value iteration did not converge after " + std::to_string(iterations) +
                             " iterations (residual " + std::to_string(residual) + ")"),
          residual_(residual),
          iterations_(iterations) {}
    [[nodiscard]] double residual() const noexcept { return residual_; }
    [[nodiscard]] std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

class SingularChain : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RviaOptions {
    std::size_t ref_state = 0;
    double epsilon = 1e-3;
    std::size_t max_iters = 1'000'000;
};

/// Solver output. `bias` is the relative value function the greedy policy was
/// extracted from, so (actions, bias, average_cost) is the certified triple.
struct PolicyTable {
    Policy actions;
    double average_cost = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    std::size_t ref_state = 0;
    std::vector<double> bias;
};

namespace detail {

inline double q_value(const FiniteMdp& mdp, std::size_t s, std::size_t a, std::span<const double> h) {
    double v = mdp.cost(s, a);
    for (const auto& t : mdp.row(s, a)) v += t.prob * h[t.next];
    return v;
}

/// Minimum over actions with ties going to the lowest action index.
inline std::pair<double, int> greedy(const FiniteMdp& mdp, std::size_t s, std::span<const double> h) {
    double best = q_value(mdp, s, 0, h);
    int best_a = 0;
    for (std::size_t a = 1; a < mdp.n_actions(); ++a) {
        const double v = q_value(mdp, s, a, h);
        if (v < best) {
            best = v;
            best_a = static_cast<int>(a);
        }
    }
    return {best, best_a};
}

using Chain = std::vector<std::vector<Transition>>;

inline Chain induced_chain(const FiniteMdp& mdp, const Policy& policy) {
    mdp.validate_policy(policy);
    Chain chain(mdp.n_states());
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        for (const auto& t : mdp.row(s, static_cast<std::size_t>(policy[s])))
            if (t.prob > 0.0) chain[s].push_back(t);
    return chain;
}

/// Strongly connected components (iterative Tarjan). Returns the component id
/// of every state and the number of components.
inline std::pair<std::vector<std::size_t>, std::size_t> scc(const Chain& chain) {
    constexpr std::size_t unvisited = std::numeric_limits<std::size_t>::max();
    const std::size_t n = chain.size();
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> work;  // (state, next edge)
    std::size_t counter = 0, n_comp = 0;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        work.push_back({root, 0});
        while (!work.empty()) {
            auto& [v, edge] = work.back();
            if (edge == 0 && index[v] == unvisited) {
                index[v] = low[v] = counter++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (edge < chain[v].size()) {
                const std::size_t w = chain[v][edge++].next;
                if (index[w] == unvisited) {
                    work.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = n_comp;
                } while (w != v);
                ++n_comp;
            }
            const std::size_t finished = v;
            work.pop_back();
            if (!work.empty()) {
                const std::size_t parent = work.back().first;
                low[parent] = std::min(low[parent], low[finished]);
            }
        }
    }
    return {comp, n_comp};
}

/// Closed communicating classes: components with no probability leaving them.
inline std::vector<std::vector<std::size_t>> closed_classes(const Chain& chain) {
    const auto [comp, n_comp] = scc(chain);
    std::vector<bool> leaks(n_comp, false);
    for (std::size_t s = 0; s < chain.size(); ++s)
        for (const auto& t : chain[s])
            if (comp[t.next] != comp[s]) leaks[comp[s]] = true;
    std::vector<std::vector<std::size_t>> members(n_comp);
    for (std::size_t s = 0; s < chain.size(); ++s)
        if (!leaks[comp[s]]) members[comp[s]].push_back(s);
    std::vector<std::vector<std::size_t>> result;
    for (auto& m : members)
        if (!m.empty()) result.push_back(std::move(m));
    return result;
}

inline constexpr std::size_t direct_solve_limit = 5000;

/// Stationary distribution of the chain restricted to one closed class.
inline std::vector<double> class_stationary(const Chain& chain, const std::vector<std::size_t>& members) {
    const std::size_t m = members.size();
    if (m == 1) return {1.0};
    std::vector<std::size_t> local(chain.size(), std::numeric_limits<std::size_t>::max());
    for (std::size_t k = 0; k < m; ++k) local[members[k]] = k;

    if (m > direct_solve_limit) {
        // Power iteration on the lazy chain (P + I) / 2, which is aperiodic.
        std::vector<double> pi(m, 1.0 / static_cast<double>(m)), next(m);
        for (int iter = 0; iter < 1'000'000; ++iter) {
            for (std::size_t k = 0; k < m; ++k) next[k] = 0.5 * pi[k];
            for (std::size_t k = 0; k < m; ++k)
                for (const auto& t : chain[members[k]]) next[local[t.next]] += 0.5 * pi[k] * t.prob;
            double diff = 0.0;
            for (std::size_t k = 0; k < m; ++k) diff = std::max(diff, std::abs(next[k] - pi[k]));
            pi.swap(next);
            if (diff < 1e-15) return pi;
        }
        throw SingularChain("power iteration for the stationary distribution did not converge");
    }

    // Solve (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t k = 0; k < m; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        if (k + 1 != m) triplets.emplace_back(col, col, -1.0);
        for (const auto& t : chain[members[k]]) {
            const std::size_t row = local[t.next];
            if (row + 1 != m) triplets.emplace_back(static_cast<Eigen::Index>(row), col, t.prob);
        }
        triplets.emplace_back(static_cast<Eigen::Index>(m - 1), col, 1.0);
    }
    Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    a.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw SingularChain("stationary system is singular");
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    rhs[static_cast<Eigen::Index>(m - 1)] = 1.0;
    const Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) throw SingularChain("stationary solve failed");
    if ((a * x - rhs).lpNorm<Eigen::Infinity>() > 1e-9) throw SingularChain("stationary solve is inaccurate");
    return {x.data(), x.data() + m};
}

}  // namespace detail

/// Relative value iteration. Stops once the sup-norm change of the relative
/// values drops below `epsilon`; the average cost is V(ref_state).
inline PolicyTable rvia(const FiniteMdp& mdp, const RviaOptions& opt = {}) {
    const std::size_t n = mdp.n_states();
    if (opt.ref_state >= n) throw std::invalid_argument("reference state out of range");
    if (!(opt.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");

    std::vector<double> h_prev(n, 0.0), v(n), h(n);
    Policy actions(n, 0);
    double diff = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 1; iter <= opt.max_iters; ++iter) {
        for (std::size_t s = 0; s < n; ++s) {
            const auto [best, a] = detail::greedy(mdp, s, h_prev);
            v[s] = best;
            actions[s] = a;
        }
        const double ref_value = v[opt.ref_state];
        diff = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            h[s] = v[s] - ref_value;
            diff = std::max(diff, std::abs(h[s] - h_prev[s]));
        }
        if (diff < opt.epsilon) {
            return PolicyTable{std::move(actions), ref_value, diff, iter, opt.ref_state, std::move(h_prev)};
        }
        h_prev.swap(h);
    }
    throw NonConvergence(diff, opt.max_iters);
}

/// Sup-norm violation of h(z) + g = min_a [C(z,a) + sum P h], also counting
/// any gap between the policy's action and the minimizing one.
inline double bellman_residual(const FiniteMdp& mdp, const Policy& policy, std::span<const double> bias,
                               double average_cost) {
    mdp.validate_policy(policy);
    if (bias.size() != mdp.n_states()) throw std::invalid_argument("bias size does not match state count");
    double worst = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        const double best = detail::greedy(mdp, s, bias).first;
        const double chosen = detail::q_value(mdp, s, static_cast<std::size_t>(policy[s]), bias);
        worst = std::max({worst, std::abs(best - average_cost - bias[s]), chosen - best});
    }
    return worst;
}

inline double bellman_residual(const FiniteMdp& mdp, const PolicyTable& table) {
    return bellman_residual(mdp, table.actions, table.bias, table.average_cost);
}

/// True iff the chain induced by `policy` has exactly one closed class.
inline bool certify_unichain(const FiniteMdp& mdp, const Policy& policy) {
    return detail::closed_classes(detail::induced_chain(mdp, policy)).size() == 1;
}

/// Long-run state occupation of the chain induced by `policy` started from
/// `initial`. Handles several closed classes by weighting each class's
/// stationary distribution with its absorption probability.
inline std::vector<double> long_run_distribution(const FiniteMdp& mdp, const Policy& policy,
                                                 std::span<const double> initial) {
    const auto chain = detail::induced_chain(mdp, policy);
    const std::size_t n = mdp.n_states();
    if (initial.size() != n) throw std::invalid_argument("initial distribution size does not match state count");
    const auto classes = detail::closed_classes(chain);

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> class_of(n, none);
    for (std::size_t k = 0; k < classes.size(); ++k)
        for (std::size_t s : classes[k]) class_of[s] = k;

    std::vector<double> weight(classes.size(), 0.0);
    std::vector<std::size_t> transient;
    for (std::size_t s = 0; s < n; ++s) {
        if (class_of[s] == none) transient.push_back(s);
        else weight[class_of[s]] += initial[s];
    }

    if (classes.size() > 1 && !transient.empty()) {
        // Expected visits u to transient states: (I - P_TT)^T u = initial_T.
        bool any_mass = false;
        for (std::size_t s : transient) any_mass = any_mass || initial[s] != 0.0;
        if (any_mass) {
            const std::size_t m = transient.size();
            std::vector<std::size_t> local(n, none);
            for (std::size_t k = 0; k < m; ++k) local[transient[k]] = k;
            std::vector<Eigen::Triplet<double>> triplets;
            Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
            for (std::size_t k = 0; k < m; ++k) {
                const auto i = static_cast<Eigen::Index>(k);
                triplets.emplace_back(i, i, 1.0);
                rhs[i] = initial[transient[k]];
                for (const auto& t : chain[transient[k]])
                    if (local[t.next] != none)
                        triplets.emplace_back(static_cast<Eigen::Index>(local[t.next]), i, -t.prob);
            }
            Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
            a.setFromTriplets(triplets.begin(), triplets.end());
            Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
            lu.compute(a);
            if (lu.info() != Eigen::Success) throw SingularChain("transient system is singular");
            const Eigen::VectorXd visits = lu.solve(rhs);
            if (lu.info() != Eigen::Success || !visits.allFinite()) throw SingularChain("transient solve failed");
            for (std::size_t k = 0; k < m; ++k)
                for (const auto& t : chain[transient[k]])
                    if (class_of[t.next] != none)
                        weight[class_of[t.next]] += visits[static_cast<Eigen::Index>(k)] * t.prob;
        }
    } else if (classes.size() == 1) {
        weight[0] = 1.0;
    }

    std::vector<double> occupation(n, 0.0);
    for (std::size_t k = 0; k < classes.size(); ++k) {
        if (weight[k] == 0.0) continue;
        const auto pi = detail::class_stationary(chain, classes[k]);
        for (std::size_t j = 0; j < classes[k].size(); ++j) occupation[classes[k][j]] = weight[k] * pi[j];
    }
    return occupation;
}

/// Stationary distribution of a unichain policy.
inline std::vector<double> stationary_distribution(const FiniteMdp& mdp, const Policy& policy) {
    const auto chain = detail::induced_chain(mdp, policy);
    const auto classes = detail::closed_classes(chain);
    if (classes.size() != 1)
        throw SingularChain("policy induces " + std::to_string(classes.size()) + " closed classes");
    std::vector<double> occupation(mdp.n_states(), 0.0);
    const auto pi = detail::class_stationary(chain, classes[0]);
    for (std::size_t j = 0; j < classes[0].size(); ++j) occupation[classes[0][j]] = pi[j];
    return occupation;
}

inline double average_cost_under(const FiniteMdp& mdp, const Policy& policy, std::span<const double> occupation) {
    double total = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); ++s)
        if (occupation[s] != 0.0) total += occupation[s] * mdp.cost(s, static_cast<std::size_t>(policy[s]));
    return total;
}

/// Exact long-run average cost of a unichain policy. Throws SingularChain otherwise.
inline double evaluate_policy(const FiniteMdp& mdp, const Policy& policy) {
    return average_cost_under(mdp, policy, stationary_distribution(mdp, policy));
}

/// Exact long-run average cost from a given initial distribution; valid for
/// multichain policies too.
inline double evaluate_policy_from(const FiniteMdp& mdp, const Policy& policy, std::span<const double> initial) {
    return average_cost_under(mdp, policy, long_run_distribution(mdp, policy, initial));
}

struct OracleResult {
    Policy policy;
    double average_cost = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    std::size_t skipped = 0;
};

inline constexpr double oracle_policy_limit = 1e6;

/// Enumerates every deterministic stationary policy and keeps the cheapest.
/// Policies that do not induce a unichain are skipped and counted.
inline OracleResult brute_force_oracle(const FiniteMdp& mdp) {
    const double count = std::pow(static_cast<double>(mdp.n_actions()), static_cast<double>(mdp.n_states()));
    if (count > oracle_policy_limit)
        throw TooLarge("policy enumeration needs " + std::to_string(count) + " evaluations (limit 1e6)");

    OracleResult result;
    Policy policy(mdp.n_states(), 0);
    const int n_actions = static_cast<int>(mdp.n_actions());
    while (true) {
        try {
            const double g = evaluate_policy(mdp, policy);
            ++result.evaluated;
            if (g < result.average_cost) {
                result.average_cost = g;
                result.policy = policy;
            }
        } catch (const SingularChain&) {
            ++result.skipped;
        }
        std::size_t digit = 0;
        while (digit < policy.size() && ++policy[digit] == n_actions) policy[digit++] = 0;
        if (digit == policy.size()) break;
    }
    if (result.evaluated == 0) throw SingularChain("no enumerated policy induces a unichain");
    return result;
}

}  // namespace pulltrack
