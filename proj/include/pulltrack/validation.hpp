#pragma once

// Self-check report used by the `validate` command.

#include <chrono>
#include <iomanip>
#include <cmath>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "pulltrack/belief.hpp"
#include "pulltrack/experiments.hpp"
#include "pulltrack/solver.hpp"

namespace pulltrack {

enum class ValidationLevel { quick, full };

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

inline FiniteMdp random_full_support_mdp(std::mt19937_64& rng, std::size_t n_states, std::size_t n_act) {
    std::uniform_real_distribution<double> u(0.05, 1.0), c(0.0, 10.0);
    FiniteMdp mdp(n_states, n_act);
    for (std::size_t s = 0; s < n_states; ++s)
        for (std::size_t a = 0; a < n_act; ++a) {
            std::vector<double> w(n_states);
            double sum = 0.0;
            for (auto& x : w) sum += (x = u(rng));
            for (std::size_t t = 0; t < n_states; ++t) mdp.add_transition(s, a, t, w[t] / sum);
            mdp.set_cost(s, a, c(rng));
        }
    return mdp;
}

template <class F>
CheckResult timed(std::string name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r{std::move(name), false, {}, 0.0};
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

}  // namespace detail

inline std::vector<CheckResult> validate(ValidationLevel level) {
    std::vector<CheckResult> out;
    const bool full = level == ValidationLevel::full;

    out.push_back(detail::timed("solver_vs_oracle", [](CheckResult& r) {
        std::mt19937_64 rng(12345);
        double worst = 0.0;
        for (int seed = 0; seed < 50; ++seed) {
            const FiniteMdp mdp = detail::random_full_support_mdp(rng, 6, 3);
            const double g = rvia(mdp, {.ref_state = 0, .epsilon = 1e-10, .max_iters = 1'000'000}).average_cost;
            worst = std::max(worst, std::abs(g - brute_force_oracle(mdp).average_cost));
        }
        r.passed = worst <= 1e-6;
        r.detail = "50 random 6x3 MDPs, max |rvia - oracle| = " + format_double(worst) + " (tol 1e-6)";
    }));

    out.push_back(detail::timed("belief_equivalence", [](CheckResult& r) {
        double worst = 0.0;
        for (int k = 0; k <= 20; ++k) {
            const SourceModel m{k * 0.05, 1};
            for (Bit last : {0, 1}) {
                double b = belief_step(0.5, m, 1, last);
                for (int age = 1; age <= 100; ++age) {
                    if (age > 1) b = belief_step(b, m, age, last);
                    worst = std::max(worst, std::abs(b - belief_closed_form(m, last, age)));
                }
            }
        }
        r.passed = worst <= 1e-12;
        r.detail = "max deviation " + format_double(worst) + " (tol 1e-12)";
    }));

    out.push_back(detail::timed("kernel_stochasticity", [](CheckResult& r) {
        double worst = 0.0;
        for (const auto& name : preset_names()) {
            const SweepSpec spec = make_preset(name);
            for (double v : spec.grid) {
                SystemParams p = spec.base;
                set_swept(p, spec.swept, v);
                worst = std::max(worst, build_kernel(p).max_row_sum_error());
            }
        }
        r.passed = worst <= 1e-12;
        r.detail = "all preset grid points at N=30, max |row sum - 1| = " + format_double(worst) + " (tol 1e-12)";
    }));

    const std::uint64_t horizon = full ? 1'000'000 : 200'000;
    const std::size_t reps = full ? 10 : 4;
    for (const auto& name : preset_names()) {
        out.push_back(detail::timed("consistency_" + name, [&](CheckResult& r) {
            SweepSpec spec = make_preset(name);
            if (!full) spec.grid = {spec.grid[spec.grid.size() / 2]};
            spec.policies = {PolicyKind::optimal_rvia, PolicyKind::age_optimal_rvia, PolicyKind::max_age_first};
            spec.sim.horizon = horizon;
            spec.sim.replications = reps;
            spec.sim.seed = 2718;
            const SweepResult res = run_sweep(spec);
            double worst_ratio = 0.0, worst_residual = 0.0;
            r.passed = true;
            for (const auto& pt : res.points) {
                for (const auto& pp : pt.policies) {
                    if (pp.status != "ok" || !pp.analytic_cost || !pp.sim) {
                        r.passed = false;
                        continue;
                    }
                    const double tol = std::max(0.02 * *pp.analytic_cost, pp.sim->ci95_halfwidth);
                    const double err = std::abs(pp.sim->mean_cost - *pp.analytic_cost);
                    worst_ratio = std::max(worst_ratio, err / tol);
                    if (err > tol) r.passed = false;
                    if (pp.kind == PolicyKind::optimal_rvia) {
                        const FiniteMdp mdp = build_tracking_mdp(pt.params);
                        PolicyTable t = solve_optimal(pt.params, spec.rvia);
                        worst_residual = std::max(worst_residual, bellman_residual(mdp, t));
                    }
                }
            }
            if (worst_residual > 10 * spec.rvia.epsilon) r.passed = false;
            r.detail = std::to_string(res.points.size()) + " grid point(s), worst |sim-exact|/tol = " +
                       format_double(worst_ratio) + ", worst Bellman residual = " + format_double(worst_residual);
        }));
    }
    return out;
}

inline bool print_report(std::ostream& os, const std::vector<CheckResult>& results) {
    bool ok = true;
    for (const auto& r : results) {
        os << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << std::fixed << std::setprecision(2) << r.seconds
           << " s): " << r.detail << '\n';
        os.unsetf(std::ios::floatfield);
        ok = ok && r.passed;
    }
    os << (ok ? "all checks passed" : "some checks FAILED") << '\n';
    return ok;
}

}  // namespace pulltrack
