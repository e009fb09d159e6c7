#include <cmath>

#include <gtest/gtest.h>

#include "pulltrack/simulator.hpp"

namespace pulltrack {
namespace {

SystemParams sharp_sources() {
    SystemParams p;
    p.sources = {SourceModel{0.9, 1}, SourceModel{0.9, 2}};
    p.q = {0.9, 0.9};
    p.rho12 = p.rho21 = 0.5;
    p.alpha = 0.5;
    p.N = 30;
    return p;
}

TEST(Simulator, AlwaysIdleConvergesToHalfErrorPerSource) {
    SimConfig cfg;
    cfg.params = sharp_sources();
    cfg.horizon = 1'000'000;
    cfg.replications = 4;
    cfg.seed = 17;
    const SimResult r = run(cfg, PolicySpec{PolicyKind::always_idle, std::nullopt, {1, 1}});
    EXPECT_NEAR(r.mean_cost, 1.0, 0.01);
    EXPECT_EQ(r.pull_rate[0], 0.0);
    EXPECT_EQ(r.pull_rate[1], 0.0);
}

TEST(Simulator, OptimalMatchesExactEvaluation) {
    SimConfig cfg;
    cfg.params = sharp_sources();
    cfg.horizon = 300'000;
    cfg.replications = 6;
    cfg.seed = 5;
    const PolicySpec spec = make_policy(PolicyKind::optimal_rvia, cfg.params);
    const FiniteMdp mdp = build_tracking_mdp(cfg.params);
    const StateSpace space(cfg.params.N);
    const double exact = evaluate_policy_from(mdp, spec.as_policy(space), space.fresh_uniform());
    const SimResult r = run(cfg, spec);
    EXPECT_LE(std::abs(r.mean_cost - exact), std::max(0.02 * exact, r.ci95_halfwidth));
}

TEST(Simulator, FullyCorrelatedPerfectChannel) {
    SimConfig cfg;
    cfg.params = sharp_sources();
    cfg.params.q = {1, 1};
    cfg.params.rho12 = cfg.params.rho21 = 1;
    cfg.params.alpha = 0;
    cfg.horizon = 400'000;
    cfg.replications = 2;
    const SimResult r = run(cfg, PolicySpec{PolicyKind::max_age_first, std::nullopt, {1, 1}});
    for (double d : r.mean_distortion) EXPECT_LE(d, 0.1 + 0.005);
    EXPECT_NEAR(r.pull_rate[0] + r.pull_rate[1], 1.0, 1e-12);
}

TEST(Simulator, MaxAgeFirstAlwaysPulls) {
    SimConfig cfg;
    cfg.params = sharp_sources();
    cfg.horizon = 50'000;
    cfg.replications = 3;
    const SimResult r = run(cfg, PolicySpec{PolicyKind::max_age_first, std::nullopt, {1, 1}});
    EXPECT_NEAR(r.pull_rate[0] + r.pull_rate[1], 1.0, 1e-12);
    for (const auto& rep : r.replications) EXPECT_NEAR(rep.pull_rate[0] + rep.pull_rate[1], 1.0, 1e-12);
}

TEST(Simulator, ReproducibleAcrossRunsAndThreadCounts) {
    SimConfig cfg;
    cfg.params = sharp_sources();
    cfg.horizon = 40'000;
    cfg.replications = 5;
    cfg.seed = 99;
    cfg.threads = 1;
    const PolicySpec spec{PolicyKind::uniform_random, std::nullopt, {1, 1}};
    const SimResult a = run(cfg, spec);
    cfg.threads = 3;
    const SimResult b = run(cfg, spec);
    ASSERT_EQ(a.replications.size(), b.replications.size());
    EXPECT_EQ(a.mean_cost, b.mean_cost);
    EXPECT_EQ(a.ci95_halfwidth, b.ci95_halfwidth);
    for (std::size_t k = 0; k < a.replications.size(); ++k) {
        EXPECT_EQ(a.replications[k].mean_cost, b.replications[k].mean_cost);
        EXPECT_EQ(a.replications[k].pull_rate, b.replications[k].pull_rate);
    }
    cfg.seed = 100;
    EXPECT_NE(run(cfg, spec).mean_cost, a.mean_cost);
}

TEST(Simulator, ConfidenceIntervalCoverage) {
    // Always-idle from a uniform start has a known mean; count how often the
    // 95% interval from 10 short replications covers it.
    SimConfig cfg;
    cfg.params = sharp_sources();
    cfg.horizon = 20'000;
    cfg.warmup = 1'000;
    cfg.replications = 10;
    cfg.threads = 1;
    const double truth = 1.0 - std::pow(0.8, 30);
    int covered = 0;
    constexpr int experiments = 100;
    for (int e = 0; e < experiments; ++e) {
        cfg.seed = 1000 + static_cast<std::uint64_t>(e);
        const SimResult r = run(cfg, PolicySpec{PolicyKind::always_idle, std::nullopt, {1, 1}});
        covered += std::abs(r.mean_cost - truth) <= r.ci95_halfwidth;
    }
    EXPECT_GE(covered, 85);
}

TEST(Simulator, Ci95UsesStudentT) {
    const std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // sd = 3.0276504, t(0.975, 9) = 2.2621572
    EXPECT_NEAR(ci95_halfwidth(xs), 2.2621572 * 3.0276504 / std::sqrt(10.0), 1e-6);
    std::vector<double> many(40);
    for (std::size_t k = 0; k < many.size(); ++k) many[k] = static_cast<double>(k % 2);
    const double sd = std::sqrt(40.0 * 0.25 / 39.0);
    EXPECT_NEAR(ci95_halfwidth(many), 1.959964 * sd / std::sqrt(40.0), 1e-6);
    EXPECT_TRUE(std::isnan(ci95_halfwidth({1.0})));
}

TEST(Simulator, CompensatedSum) {
    CompensatedSum s;
    s.add(1.0);
    for (int k = 0; k < 1000; ++k) s.add(1e-16);
    EXPECT_NEAR(s.value(), 1.0 + 1e-13, 1e-18);
}

TEST(Simulator, RejectsBadConfig) {
    SimConfig cfg;
    cfg.params = sharp_sources();
    cfg.horizon = 10;
    cfg.warmup = 10;
    EXPECT_THROW((void)run(cfg, PolicySpec{}), std::invalid_argument);
    cfg.horizon = 100;
    EXPECT_THROW((void)run(cfg, PolicySpec{PolicyKind::optimal_rvia, std::nullopt, {1, 1}}), MissingTable);
}

}  // namespace
}  // namespace pulltrack
