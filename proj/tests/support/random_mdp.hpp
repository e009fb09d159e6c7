#pragma once

#include <random>

#include "pulltrack/finite_mdp.hpp"

namespace pulltrack::testing {

/// Random MDP whose rows all have full support, so every policy induces an
/// irreducible aperiodic chain.
inline FiniteMdp random_dense_mdp(std::mt19937_64& rng, std::size_t n_states, std::size_t n_actions) {
    std::uniform_real_distribution<double> u(0.05, 1.0), c(0.0, 10.0);
    FiniteMdp mdp(n_states, n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a) {
            std::vector<double> w(n_states);
            double sum = 0.0;
            for (auto& x : w) sum += (x = u(rng));
            std::vector<Transition> row;
            for (std::size_t t = 0; t < n_states; ++t) row.push_back({t, w[t] / sum});
            mdp.set_row(s, a, std::move(row));
            mdp.set_cost(s, a, c(rng));
        }
    return mdp;
}

/// Random sparse MDP: each row has 1..3 successors. Some policies may be
/// multichain or periodic.
inline FiniteMdp random_sparse_mdp(std::mt19937_64& rng, std::size_t n_states, std::size_t n_actions) {
    std::uniform_real_distribution<double> u(0.1, 1.0), c(0.0, 10.0);
    std::uniform_int_distribution<std::size_t> pick(0, n_states - 1), width(1, 3);
    FiniteMdp mdp(n_states, n_actions);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_actions; ++a) {
            const std::size_t k = width(rng);
            std::vector<double> w(k);
            double sum = 0.0;
            for (auto& x : w) sum += (x = u(rng));
            // Self-loop first keeps the chain aperiodic.
            mdp.add_transition(s, a, s, w[0] / sum);
            for (std::size_t j = 1; j < k; ++j) mdp.add_transition(s, a, pick(rng), w[j] / sum);
            mdp.set_cost(s, a, c(rng));
        }
    return mdp;
}

}  // namespace pulltrack::testing
