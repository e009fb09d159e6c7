#pragma once

// Parameter sweeps over the tracking problem: solve, evaluate exactly,
// simulate, and emit CSV rows.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pulltrack/io.hpp"
#include "pulltrack/policies.hpp"
#include "pulltrack/simulator.hpp"
#include "pulltrack/solver.hpp"
#include "pulltrack/tracking_model.hpp"

namespace pulltrack {

inline constexpr int csv_schema_version = 1;

/// Sets the named parameter: "alpha", "rho" (both cross probabilities),
/// "p" (both sources) or "q" (both channels).
inline void set_swept(SystemParams& params, std::string_view name, double value) {
    if (name == "alpha") params.alpha = value;
    else if (name == "rho") params.rho12 = params.rho21 = value;
    else if (name == "p") params.sources[0].p = params.sources[1].p = value;
    else if (name == "q") params.q[0] = params.q[1] = value;
    else throw ConfigError("swept parameter must be one of alpha, rho, p, q");
}

struct SweepSpec {
    std::string name = "custom";
    SystemParams base;
    std::string swept = "alpha";
    std::vector<double> grid;
    std::vector<PolicyKind> policies{PolicyKind::optimal_rvia, PolicyKind::age_optimal_rvia,
                                     PolicyKind::max_age_first, PolicyKind::always_idle};
    SimConfig sim;
    RviaOptions rvia;
    bool simulate = true;
    /// Grid points solved concurrently; 0 means one per hardware thread.
    std::size_t threads = 0;

    void validate() const {
        if (grid.empty()) throw ConfigError("sweep grid is empty");
        if (!std::is_sorted(grid.begin(), grid.end())) throw ConfigError("sweep grid must be sorted");
        if (policies.empty()) throw ConfigError("sweep needs at least one policy");
        SystemParams probe = base;
        for (double v : grid) {
            set_swept(probe, swept, v);
            try {
                probe.validate();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        if (simulate) {
            if (sim.horizon <= sim.warmup) throw ConfigError("horizon must exceed warmup");
            if (sim.replications < 1) throw ConfigError("at least one replication is required");
        }
    }
};

inline std::vector<double> linear_grid(double first, double last, double step) {
    std::vector<double> out;
    const auto n = static_cast<int>(std::lround((last - first) / step));
    for (int k = 0; k <= n; ++k) out.push_back(std::round((first + k * step) * 1e12) / 1e12);
    return out;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig2", "fig3a", "fig3b", "fig4", "fig5"};
    return names;
}

/// Named experiment presets. Weights 1, N = 30, epsilon 1e-3 throughout.
inline SweepSpec make_preset(std::string_view name) {
    SweepSpec spec;
    spec.name = std::string(name);
    SystemParams& p = spec.base;
    p.w = {1.0, 1.0};
    p.N = 30;
    p.distortions = {presets::real_time_error(), presets::real_time_error()};
    if (name == "fig2") {
        p.sources[0].p = p.sources[1].p = 0.7;
        p.q = {0.8, 0.6};
        p.rho12 = 0.4;
        p.rho21 = 0.7;
        p.alpha = 0.0;
        spec.swept = "alpha";
        spec.grid = linear_grid(0.0, 2.0, 0.25);
    } else if (name == "fig3a" || name == "fig3b") {
        p.sources[0].p = p.sources[1].p = 0.9;
        p.q = {0.9, 0.9};
        p.alpha = 0.5;
        if (name == "fig3b") p.distortions = {presets::asym_d1(), presets::asym_d2()};
        spec.swept = "rho";
        spec.grid = linear_grid(0.0, 1.0, 0.1);
    } else if (name == "fig4") {
        p.q = {0.8, 0.6};
        p.rho12 = 0.4;
        p.rho21 = 0.7;
        p.alpha = 0.5;
        spec.swept = "p";
        spec.grid = linear_grid(0.1, 0.9, 0.1);
    } else if (name == "fig5") {
        p.sources[0].p = p.sources[1].p = 0.9;
        p.rho12 = p.rho21 = 0.8;
        p.alpha = 0.5;
        spec.swept = "q";
        spec.grid = linear_grid(0.1, 1.0, 0.1);
    } else {
        throw ConfigError("unknown preset '" + std::string(name) + "'");
    }
    set_swept(p, spec.swept, spec.grid.front());
    return spec;
}

/// Outcome for one policy at one grid point.
struct PolicyPoint {
    PolicyKind kind{};
    std::string status = "ok";
    std::optional<double> analytic_cost;
    bool unichain = false;
    std::optional<SimResult> sim;
    std::size_t solver_iterations = 0;
    double residual = 0.0;
    /// Solver's own average-cost estimate for table-backed kinds.
    std::optional<double> solver_cost;
    Policy actions;
};

struct SweepPoint {
    double value = 0.0;
    SystemParams params;
    std::vector<PolicyPoint> policies;

    [[nodiscard]] const PolicyPoint* find(PolicyKind k) const {
        for (const auto& pp : policies)
            if (pp.kind == k) return &pp;
        return nullptr;
    }
};

struct SweepResult {
    SweepSpec spec;
    std::vector<SweepPoint> points;
};

/// Solves, evaluates and (optionally) simulates every policy at one parameter set.
/// Exact evaluation starts from the simulator's initial distribution (fresh
/// samples, uniform sample values), so it is defined for multichain policies.
inline SweepPoint evaluate_point(const SystemParams& params, const std::vector<PolicyKind>& kinds,
                                 const RviaOptions& opt, const std::optional<SimConfig>& sim) {
    SweepPoint point;
    point.params = params;
    const StateSpace space(params.N);
    const FiniteMdp mdp = build_tracking_mdp(params, CostModel::distortion);
    const auto initial = space.fresh_uniform();

    std::optional<PolicyTable> optimal, age_optimal;
    std::string optimal_status = "ok", age_status = "ok";
    std::size_t optimal_iters = 0, age_iters = 0;
    double optimal_res = 0.0, age_res = 0.0;
    auto needs = [&](PolicyKind k) { return std::find(kinds.begin(), kinds.end(), k) != kinds.end(); };
    if (needs(PolicyKind::optimal_rvia)) {
        try {
            optimal = rvia(mdp, opt);
        } catch (const NonConvergence& e) {
            optimal_status = "nonconvergence";
            optimal_iters = e.iterations();
            optimal_res = e.residual();
        }
    }
    if (needs(PolicyKind::age_optimal_rvia)) {
        FiniteMdp age_mdp = mdp;
        age_mdp.set_costs(build_age_cost(params));
        try {
            age_optimal = rvia(age_mdp, opt);
        } catch (const NonConvergence& e) {
            age_status = "nonconvergence";
            age_iters = e.iterations();
            age_res = e.residual();
        }
    }

    for (PolicyKind kind : kinds) {
        PolicyPoint pp;
        pp.kind = kind;
        PolicySpec spec{kind, std::nullopt, params.w};
        if (kind == PolicyKind::optimal_rvia || kind == PolicyKind::age_optimal_rvia) {
            const bool is_opt = kind == PolicyKind::optimal_rvia;
            const auto& table = is_opt ? optimal : age_optimal;
            if (!table) {
                pp.status = is_opt ? optimal_status : age_status;
                pp.solver_iterations = is_opt ? optimal_iters : age_iters;
                pp.residual = is_opt ? optimal_res : age_res;
                point.policies.push_back(std::move(pp));
                continue;
            }
            spec.table = table;
            pp.solver_iterations = table->iterations;
            pp.residual = table->residual;
            pp.solver_cost = table->average_cost;
        }
        if (kind != PolicyKind::uniform_random) {
            pp.actions = spec.as_policy(space);
            pp.unichain = certify_unichain(mdp, pp.actions);
            try {
                pp.analytic_cost = evaluate_policy_from(mdp, pp.actions, initial);
            } catch (const SingularChain&) {
                pp.status = "singular";
            }
        }
        if (sim) {
            SimConfig cfg = *sim;
            cfg.params = params;
            pp.sim = run(cfg, spec);
        }
        point.policies.push_back(std::move(pp));
    }
    return point;
}

inline SweepResult run_sweep(const SweepSpec& spec) {
    spec.validate();
    SweepResult result{spec, std::vector<SweepPoint>(spec.grid.size())};
    std::size_t workers = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, spec.grid.size());

    auto work = [&](std::size_t g) {
        SystemParams params = spec.base;
        set_swept(params, spec.swept, spec.grid[g]);
        std::optional<SimConfig> sim;
        if (spec.simulate) {
            sim = spec.sim;
            sim->seed = splitmix64(spec.sim.seed + g);
            if (workers > 1) sim->threads = 1;
        }
        result.points[g] = evaluate_point(params, spec.policies, spec.rvia, sim);
        result.points[g].value = spec.grid[g];
    };

    if (workers <= 1) {
        for (std::size_t g = 0; g < spec.grid.size(); ++g) work(g);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t g = next++; g < spec.grid.size(); g = next++) work(g);
            });
    }
    return result;
}

inline constexpr std::string_view csv_columns =
    "preset,swept_param,swept_value,policy,replication,analytic_cost,sim_cost,ci95,distortion1,distortion2,"
    "pull_rate1,pull_rate2,unichain,solver_iterations,residual,status";

/// First line: "# pulltrack-sweep schema_version=1 params_hash=<hex> rng=<name> seed=<n>",
/// then the column header, then per grid point and policy one row per
/// replication followed by an aggregate row whose replication field is "all".
inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
    os << "# pulltrack-sweep schema_version=" << csv_schema_version << " params_hash=" << params_hash(r.spec.base)
       << " rng=" << rng_algorithm << " seed=" << r.spec.sim.seed << '\n'
       << csv_columns << '\n';
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& point : r.points) {
        for (const auto& pp : point.policies) {
            const std::string prefix = r.spec.name + ',' + r.spec.swept + ',' + format_double(point.value) + ',' +
                                       std::string(to_string(pp.kind)) + ',';
            const std::string suffix = ',' + std::string(pp.unichain ? "1" : "0") + ',' +
                                       std::to_string(pp.solver_iterations) + ',' + format_double(pp.residual) + ',' +
                                       pp.status + '\n';
            if (pp.sim) {
                for (std::size_t k = 0; k < pp.sim->replications.size(); ++k) {
                    const auto& rep = pp.sim->replications[k];
                    os << prefix << k << ",," << format_double(rep.mean_cost) << ",,"
                       << format_double(rep.mean_distortion[0]) << ',' << format_double(rep.mean_distortion[1]) << ','
                       << format_double(rep.pull_rate[0]) << ',' << format_double(rep.pull_rate[1]) << suffix;
                }
                const auto& s = *pp.sim;
                os << prefix << "all," << opt(pp.analytic_cost) << ',' << format_double(s.mean_cost) << ','
                   << (std::isnan(s.ci95_halfwidth) ? std::string() : format_double(s.ci95_halfwidth)) << ','
                   << format_double(s.mean_distortion[0]) << ',' << format_double(s.mean_distortion[1]) << ','
                   << format_double(s.pull_rate[0]) << ',' << format_double(s.pull_rate[1]) << suffix;
            } else {
                os << prefix << "all," << opt(pp.analytic_cost) << ",,,,,,," << suffix.substr(1);
            }
        }
    }
}

}  // namespace pulltrack

namespace pulltrack {

/// Builds a sweep from a config object. Optional "preset" seeds the defaults;
/// top-level scenario keys override it; "sim", "rvia" and "sweep" sections
/// override the run settings.
inline SweepSpec sweep_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    SweepSpec spec = j.contains("preset") ? make_preset(j.at("preset").get<std::string>()) : SweepSpec{};
    apply_params_json(spec.base, j);
    try {
        if (j.contains("sim")) {
            const auto& s = j.at("sim");
            spec.sim.horizon = s.value("horizon", spec.sim.horizon);
            spec.sim.warmup = s.value("warmup", spec.sim.warmup);
            spec.sim.seed = s.value("seed", spec.sim.seed);
            spec.sim.replications = s.value("replications", spec.sim.replications);
        }
        if (j.contains("rvia")) {
            const auto& r = j.at("rvia");
            spec.rvia.epsilon = r.value("epsilon", spec.rvia.epsilon);
            spec.rvia.max_iters = r.value("max_iters", spec.rvia.max_iters);
            spec.rvia.ref_state = r.value("ref_state", spec.rvia.ref_state);
        }
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            spec.swept = s.value("param", spec.swept);
            if (s.contains("values")) spec.grid = s.at("values").get<std::vector<double>>();
            if (s.contains("policies")) {
                spec.policies.clear();
                for (const auto& name : s.at("policies")) {
                    const auto kind = parse_policy_kind(name.get<std::string>());
                    if (!kind) throw ConfigError("unknown policy '" + name.get<std::string>() + "'");
                    spec.policies.push_back(*kind);
                }
            }
            spec.simulate = s.value("simulate", spec.simulate);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return spec;
}

}  // namespace pulltrack
