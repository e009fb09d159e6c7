#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "pulltrack/experiments.hpp"

namespace pulltrack {
namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string l; std::getline(is, l);) out.push_back(l);
    return out;
}

std::size_t fields(const std::string& row) { return static_cast<std::size_t>(std::count(row.begin(), row.end(), ',')) + 1; }

SweepSpec small_sweep() {
    SweepSpec spec = make_preset("fig5");
    spec.base.N = 6;
    spec.grid = {0.5, 0.9};
    spec.sim.horizon = 5'000;
    spec.sim.warmup = 500;
    spec.sim.replications = 3;
    spec.sim.seed = 42;
    return spec;
}

TEST(Experiments, Presets) {
    const SweepSpec fig2 = make_preset("fig2");
    EXPECT_EQ(fig2.grid.size(), 9u);
    EXPECT_EQ(fig2.grid.front(), 0.0);
    EXPECT_EQ(fig2.grid.back(), 2.0);
    EXPECT_EQ(fig2.policies.size(), 4u);
    EXPECT_EQ(fig2.base.sources[0].p, 0.7);
    EXPECT_EQ(fig2.base.q[1], 0.6);
    EXPECT_EQ(fig2.base.rho21, 0.7);
    EXPECT_EQ(fig2.base.N, 30);

    const SweepSpec fig3b = make_preset("fig3b");
    EXPECT_EQ(fig3b.swept, "rho");
    EXPECT_EQ(fig3b.base.distortions[0], presets::asym_d1());
    EXPECT_EQ(fig3b.base.distortions[1], presets::asym_d2());
    EXPECT_EQ(make_preset("fig3a").base.distortions[0], presets::real_time_error());

    const SweepSpec fig4 = make_preset("fig4");
    EXPECT_EQ(fig4.grid, (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}));
    EXPECT_EQ(fig4.base.alpha, 0.5);

    const SweepSpec fig5 = make_preset("fig5");
    EXPECT_EQ(fig5.base.rho12, 0.8);
    EXPECT_EQ(fig5.grid.back(), 1.0);
    EXPECT_THROW((void)make_preset("fig9"), ConfigError);
}

TEST(Experiments, SetSwept) {
    SystemParams p;
    set_swept(p, "rho", 0.3);
    EXPECT_EQ(p.rho12, 0.3);
    EXPECT_EQ(p.rho21, 0.3);
    set_swept(p, "p", 0.8);
    EXPECT_EQ(p.sources[1].p, 0.8);
    set_swept(p, "q", 0.2);
    EXPECT_EQ(p.q[0], 0.2);
    set_swept(p, "alpha", 1.25);
    EXPECT_EQ(p.alpha, 1.25);
    EXPECT_THROW(set_swept(p, "N", 3), ConfigError);
}

TEST(Experiments, ConfigOverlay) {
    SystemParams p;
    apply_params_json(p, nlohmann::json::parse(R"({"p1":0.8,"q2":0.3,"rho21":0.25,"alpha":0.7,"N":12,
        "distortion1":"asym_d1","distortion2":[[0,2],[4,0]]})"));
    EXPECT_EQ(p.sources[0].p, 0.8);
    EXPECT_EQ(p.sources[1].p, 0.5);
    EXPECT_EQ(p.q[1], 0.3);
    EXPECT_EQ(p.rho21, 0.25);
    EXPECT_EQ(p.alpha, 0.7);
    EXPECT_EQ(p.N, 12);
    EXPECT_EQ(p.distortions[0], presets::asym_d1());
    EXPECT_EQ(p.distortions[1](1, 0), 4.0);

    SystemParams t;
    apply_params_json(t, nlohmann::json::parse(R"({"distortion1":"asym_d1","transpose":true})"));
    EXPECT_EQ(t.distortions[0], presets::asym_d1().transposed());

    SystemParams bad;
    EXPECT_THROW(apply_params_json(bad, nlohmann::json::parse(R"({"distortion1":"nope"})")), ConfigError);
    EXPECT_THROW(apply_params_json(bad, nlohmann::json::parse(R"({"distortion1":[[0,1]]})")), ConfigError);
    EXPECT_THROW(apply_params_json(bad, nlohmann::json::parse(R"({"p1":"x"})")), ConfigError);
    EXPECT_THROW(apply_params_json(bad, nlohmann::json::parse(R"({"q1":1.5})")), ConfigError);
    EXPECT_THROW(apply_params_json(bad, nlohmann::json::parse(R"([1,2])")), ConfigError);
}

TEST(Experiments, ParamsJsonRoundTripAndHash) {
    SystemParams p = make_preset("fig3b").base;
    p.alpha = 0.125;
    SystemParams q;
    apply_params_json(q, params_to_json(p));
    EXPECT_EQ(canonical_params(p), canonical_params(q));
    EXPECT_EQ(params_hash(p), params_hash(q));
    EXPECT_EQ(params_hash(p).size(), 16u);
    q.rho12 += 1e-9;
    EXPECT_NE(params_hash(p), params_hash(q));
}

TEST(Experiments, PolicyFileRoundTrip) {
    SystemParams p = make_preset("fig2").base;
    p.N = 5;
    p.alpha = 0.1;
    PolicyFile pf{params_hash(p), PolicyKind::optimal_rvia, solve_optimal(p)};
    std::stringstream ss;
    write_policy(ss, pf);
    const auto text = lines(ss.str());
    EXPECT_EQ(text[0], "# pulltrack-policy v1");
    EXPECT_EQ(text[1], "# params_hash " + params_hash(p));
    EXPECT_EQ(text.back(), "99 " + std::to_string(pf.table.actions.back()));

    const PolicyFile back = read_policy(ss);
    EXPECT_EQ(back.params_hash, pf.params_hash);
    EXPECT_EQ(back.kind, pf.kind);
    EXPECT_EQ(back.table.actions, pf.table.actions);
    EXPECT_EQ(back.table.average_cost, pf.table.average_cost);
    EXPECT_EQ(back.table.iterations, pf.table.iterations);
}

TEST(Experiments, PolicyFileRejectsMalformedInput) {
    std::istringstream wrong_magic("hello\n");
    EXPECT_THROW((void)read_policy(wrong_magic), ConfigError);
    std::istringstream truncated("# pulltrack-policy v1\n# kind optimal_rvia\n# n_states 16\n0 1\n1 2\n");
    EXPECT_THROW((void)read_policy(truncated), ConfigError);
    std::istringstream bad_action("# pulltrack-policy v1\n# kind optimal_rvia\n# n_states 16\n0 7\n");
    EXPECT_THROW((void)read_policy(bad_action), ConfigError);
    std::istringstream not_square("# pulltrack-policy v1\n# kind optimal_rvia\n# n_states 3\n0 0\n1 0\n2 0\n");
    EXPECT_THROW((void)read_policy(not_square), std::invalid_argument);
}

TEST(Experiments, SweepCsvLayout) {
    const SweepResult r = run_sweep(small_sweep());
    std::ostringstream os;
    write_sweep_csv(os, r);
    const auto rows = lines(os.str());
    ASSERT_GE(rows.size(), 2u);
    EXPECT_EQ(rows[0].rfind("# pulltrack-sweep schema_version=1 params_hash=", 0), 0u);
    EXPECT_NE(rows[0].find("rng=mt19937_64"), std::string::npos);
    EXPECT_EQ(rows[1], std::string(csv_columns));
    // 2 grid points x 4 policies x (3 replications + aggregate)
    EXPECT_EQ(rows.size(), 2u + 2u * 4u * 4u);
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_EQ(fields(rows[k]), 16u) << rows[k];
    EXPECT_NE(rows[5].find("fig5,q,0.5,optimal_rvia,all,"), std::string::npos);
}

TEST(Experiments, SweepIsDeterministic) {
    SweepSpec spec = small_sweep();
    spec.threads = 1;
    std::ostringstream a, b;
    write_sweep_csv(a, run_sweep(spec));
    spec.threads = 2;
    write_sweep_csv(b, run_sweep(spec));
    EXPECT_EQ(a.str(), b.str());
}

TEST(Experiments, AnalyticOnlySweep) {
    SweepSpec spec = small_sweep();
    spec.simulate = false;
    const SweepResult r = run_sweep(spec);
    for (const auto& pt : r.points)
        for (const auto& pp : pt.policies) {
            EXPECT_TRUE(pp.analytic_cost.has_value());
            EXPECT_FALSE(pp.sim.has_value());
        }
    std::ostringstream os;
    write_sweep_csv(os, r);
    const auto rows = lines(os.str());
    EXPECT_EQ(rows.size(), 2u + 2u * 4u);
    for (std::size_t k = 1; k < rows.size(); ++k) EXPECT_EQ(fields(rows[k]), 16u) << rows[k];
}

TEST(Experiments, NonConvergenceIsFlaggedPerRow) {
    SweepSpec spec = small_sweep();
    spec.simulate = false;
    spec.rvia.epsilon = 1e-300;
    spec.rvia.max_iters = 3;
    const SweepResult r = run_sweep(spec);
    ASSERT_EQ(r.points.size(), 2u);
    for (const auto& pt : r.points) {
        EXPECT_EQ(pt.find(PolicyKind::optimal_rvia)->status, "nonconvergence");
        EXPECT_FALSE(pt.find(PolicyKind::optimal_rvia)->analytic_cost.has_value());
        EXPECT_EQ(pt.find(PolicyKind::max_age_first)->status, "ok");
    }
    std::ostringstream os;
    write_sweep_csv(os, r);
    EXPECT_NE(os.str().find("nonconvergence"), std::string::npos);
}

TEST(Experiments, SweepValidation) {
    SweepSpec spec = small_sweep();
    spec.grid = {};
    EXPECT_THROW((void)run_sweep(spec), ConfigError);
    spec.grid = {0.9, 0.5};
    EXPECT_THROW((void)run_sweep(spec), ConfigError);
    spec.grid = {0.5, 1.5};
    EXPECT_THROW((void)run_sweep(spec), ConfigError);
}

}  // namespace
}  // namespace pulltrack
