#pragma once

// Slotted Monte-Carlo simulation of the physical system: true sources evolve,
// the monitor commands sensors from its observable state, channels and
// cross-observations are sampled, and realized costs are accumulated.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "pulltrack/belief.hpp"
#include "pulltrack/distortion.hpp"
#include "pulltrack/markov.hpp"
#include "pulltrack/policies.hpp"
#include "pulltrack/tracking_model.hpp"

namespace pulltrack {

/// Recorded in outputs so runs can be compared across implementations.
inline constexpr std::string_view rng_algorithm = "mt19937_64/splitmix64-streams";

struct SimConfig {
    SystemParams params;
    std::uint64_t horizon = 1'000'000;
    std::uint64_t warmup = 10'000;
    std::uint64_t seed = 1;
    std::size_t replications = 10;
    /// 0 means one worker per hardware thread.
    std::size_t threads = 0;

    void validate() const {
        params.validate();
        if (horizon <= warmup) throw std::invalid_argument("horizon must exceed warmup");
        if (replications < 1) throw std::invalid_argument("at least one replication is required");
    }
};

struct ReplicationResult {
    double mean_cost = 0.0;
    std::array<double, 2> mean_distortion{0.0, 0.0};
    std::array<double, 2> pull_rate{0.0, 0.0};
};

struct SimResult {
    double mean_cost = 0.0;
    std::array<double, 2> mean_distortion{0.0, 0.0};
    std::array<double, 2> pull_rate{0.0, 0.0};
    double ci95_halfwidth = std::numeric_limits<double>::quiet_NaN();
    std::vector<ReplicationResult> replications;
};

/// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Half-width of the 95% confidence interval of the mean of `samples`:
/// Student t for fewer than 30 samples, normal otherwise. NaN for one sample.
inline double ci95_halfwidth(const std::vector<double>& samples) {
    const std::size_t n = samples.size();
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    double z = 1.959963984540054;
    if (n < 30) {
        const boost::math::students_t dist(static_cast<double>(n - 1));
        z = boost::math::quantile(dist, 0.975);
    }
    return z * sd / std::sqrt(static_cast<double>(n));
}

namespace detail {

inline ReplicationResult simulate_replication(const SimConfig& cfg, const PolicySpec& policy, std::size_t rep) {
    const SystemParams& params = cfg.params;
    const int depth = params.N;
    Rng rng = make_stream(cfg.seed, rep);

    // estimate[i][xbar][age], distortion lookup per (source, true state, estimate).
    std::array<std::array<std::vector<Bit>, 2>, 2> estimate;
    for (std::size_t i = 0; i < 2; ++i)
        for (Bit xb : {0, 1}) {
            auto& table = estimate[i][static_cast<std::size_t>(xb)];
            table.assign(static_cast<std::size_t>(depth) + 1, 0);
            for (int age = 1; age <= depth; ++age)
                table[static_cast<std::size_t>(age)] =
                    mmd_estimate(params.distortions[i], belief_closed_form(params.sources[i], xb, age));
        }

    // The last sample is the state one slot before the first slot.
    TrackingState obs;
    std::array<Bit, 2> truth{};
    for (std::size_t i = 0; i < 2; ++i) {
        obs.xbar[i] = bernoulli(rng, 0.5) ? 1 : 0;
        obs.age[i] = 1;
        truth[i] = sample_next(params.sources[i], obs.xbar[i], rng);
    }

    CompensatedSum cost_sum;
    std::array<CompensatedSum, 2> dist_sum;
    std::array<std::uint64_t, 2> pulls{0, 0};

    for (std::uint64_t t = 0; t < cfg.horizon; ++t) {
        const Action a = policy.decide(obs, &rng);

        if (t >= cfg.warmup) {
            double cost = a == Action::idle ? 0.0 : params.alpha;
            for (std::size_t i = 0; i < 2; ++i) {
                const Bit est = estimate[i][static_cast<std::size_t>(obs.xbar[i])][static_cast<std::size_t>(obs.age[i])];
                const double d = params.distortions[i](truth[i], est);
                dist_sum[i].add(d);
                cost += params.w[i] * d;
            }
            cost_sum.add(cost);
            if (a != Action::idle) ++pulls[a == Action::pull1 ? 0 : 1];
        }

        std::array<bool, 2> refreshed{false, false};
        if (a != Action::idle) {
            const std::size_t k = a == Action::pull1 ? 0 : 1;
            if (bernoulli(rng, params.q[k])) {
                refreshed[k] = true;
                if (bernoulli(rng, params.cross_prob(k))) refreshed[1 - k] = true;
            }
        }
        for (std::size_t i = 0; i < 2; ++i) {
            if (refreshed[i]) {
                obs.xbar[i] = truth[i];
                obs.age[i] = 1;
            } else {
                obs.age[i] = std::min(obs.age[i] + 1, depth);
            }
            truth[i] = sample_next(params.sources[i], truth[i], rng);
        }
    }

    const auto slots = static_cast<double>(cfg.horizon - cfg.warmup);
    ReplicationResult r;
    r.mean_cost = cost_sum.value() / slots;
    for (std::size_t i = 0; i < 2; ++i) {
        r.mean_distortion[i] = dist_sum[i].value() / slots;
        r.pull_rate[i] = static_cast<double>(pulls[i]) / slots;
    }
    return r;
}

}  // namespace detail

/// Runs all replications (in parallel when threads allow) and aggregates them.
/// Deterministic for a given config and seed.
inline SimResult run(const SimConfig& cfg, const PolicySpec& policy) {
    cfg.validate();
    if (needs_table(policy.kind)) {
        if (!policy.table) throw MissingTable();
        if (table_depth(*policy.table) != cfg.params.N)
            throw std::invalid_argument("policy table depth does not match N");
    }

    SimResult result;
    result.replications.resize(cfg.replications);
    std::size_t workers = cfg.threads != 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cfg.replications);

    if (workers <= 1) {
        for (std::size_t rep = 0; rep < cfg.replications; ++rep)
            result.replications[rep] = detail::simulate_replication(cfg, policy, rep);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t rep = next++; rep < cfg.replications; rep = next++)
                    result.replications[rep] = detail::simulate_replication(cfg, policy, rep);
            });
    }

    // Reduction in replication order keeps the aggregate schedule-independent.
    std::vector<double> costs;
    costs.reserve(cfg.replications);
    for (const auto& r : result.replications) {
        costs.push_back(r.mean_cost);
        result.mean_cost += r.mean_cost;
        for (std::size_t i = 0; i < 2; ++i) {
            result.mean_distortion[i] += r.mean_distortion[i];
            result.pull_rate[i] += r.pull_rate[i];
        }
    }
    const auto n = static_cast<double>(cfg.replications);
    result.mean_cost /= n;
    for (std::size_t i = 0; i < 2; ++i) {
        result.mean_distortion[i] /= n;
        result.pull_rate[i] /= n;
    }
    result.ci95_halfwidth = ci95_halfwidth(costs);
    return result;
}

}  // namespace pulltrack
