// Command-line front end: solve, simulate, sweep, validate.

#include <fstream>
#include <iostream>
#include <sstream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pulltrack/pulltrack.hpp"

namespace {

using namespace pulltrack;

constexpr int exit_usage = 2;

struct CommonOptions {
    std::string config;
    std::string preset;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config, "JSON config file");
    cmd->add_option("--preset", o.preset, "experiment preset (fig2, fig3a, fig3b, fig4, fig5)");
    cmd->add_option("--set", o.overrides, "override a config key, e.g. --set alpha=0.25 (repeatable)");
}

nlohmann::json read_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    if (ss.str().find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("config file " + path + " is empty");
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + ": " + e.what());
    }
}

/// Config object from --config, then --preset, then --set overrides.
nlohmann::json gather_config(const CommonOptions& o) {
    nlohmann::json j = o.config.empty() ? nlohmann::json::object() : read_config_file(o.config);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!o.preset.empty()) j["preset"] = o.preset;
    for (const auto& kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        // "sim.horizon=1e5" addresses a nested section
        nlohmann::json* slot = &j;
        std::string leaf = key;
        if (const auto dot = key.find('.'); dot != std::string::npos) {
            slot = &j[key.substr(0, dot)];
            leaf = key.substr(dot + 1);
        }
        try {
            (*slot)[leaf] = nlohmann::json::parse(value);
        } catch (const nlohmann::json::exception&) {
            (*slot)[leaf] = value;
        }
    }
    static const std::set<std::string> known{"preset", "p1", "p2", "q1", "q2", "rho12", "rho21", "w1", "w2",
                                             "alpha", "N", "distortion1", "distortion2", "transpose",
                                             "sim", "rvia", "sweep"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    return j;
}

void warn(const SystemParams& p) {
    for (const auto& w : truncation_warnings(p)) std::cerr << "warning: " << w << '\n';
}

PolicyKind policy_kind(const std::string& name) {
    const auto kind = parse_policy_kind(name);
    if (!kind) throw ConfigError("unknown policy '" + name + "'");
    return *kind;
}

int cmd_solve(const CommonOptions& o, const std::string& policy, const std::string& out) {
    const SweepSpec spec = sweep_from_json(gather_config(o));
    warn(spec.base);
    const PolicyKind kind = policy_kind(policy);
    if (!needs_table(kind)) throw ConfigError("solve supports optimal_rvia and age_optimal_rvia");
    const FiniteMdp mdp = build_tracking_mdp(spec.base, kind == PolicyKind::optimal_rvia ? CostModel::distortion : CostModel::age);
    const PolicyTable table = rvia(mdp, spec.rvia);
    std::cout << "policy " << to_string(kind) << "\nparams_hash " << params_hash(spec.base) << "\nstates "
              << mdp.n_states() << "\naverage_cost " << format_double(table.average_cost) << "\nresidual "
              << format_double(table.residual) << "\nbellman_residual " << format_double(bellman_residual(mdp, table))
              << "\niterations " << table.iterations << "\nunichain " << (certify_unichain(mdp, table.actions) ? 1 : 0)
              << '\n';
    if (!out.empty()) save_policy(out, PolicyFile{params_hash(spec.base), kind, table});
    return 0;
}

int cmd_simulate(const CommonOptions& o, const std::string& policy, const std::string& policy_file,
                 const std::string& out) {
    const SweepSpec spec = sweep_from_json(gather_config(o));
    warn(spec.base);
    SimConfig cfg = spec.sim;
    cfg.params = spec.base;

    PolicySpec ps;
    if (!policy_file.empty()) {
        PolicyFile pf = load_policy(policy_file);
        if (pf.params_hash != params_hash(spec.base))
            std::cerr << "warning: policy file was solved for params_hash " << pf.params_hash << '\n';
        ps = PolicySpec{pf.kind, std::move(pf.table), spec.base.w};
    } else {
        ps = make_policy(policy_kind(policy), spec.base, spec.rvia);
    }
    const SimResult r = run(cfg, ps);
    std::cout << "policy " << to_string(ps.kind) << "\nmean_cost " << format_double(r.mean_cost) << "\nci95 "
              << format_double(r.ci95_halfwidth) << "\ndistortion " << format_double(r.mean_distortion[0]) << ' '
              << format_double(r.mean_distortion[1]) << "\npull_rate " << format_double(r.pull_rate[0]) << ' '
              << format_double(r.pull_rate[1]) << "\nrng " << rng_algorithm << " seed " << cfg.seed << '\n';
    if (ps.kind != PolicyKind::uniform_random) {
        const FiniteMdp mdp = build_tracking_mdp(spec.base);
        const StateSpace space(spec.base.N);
        std::cout << "analytic_cost "
                  << format_double(evaluate_policy_from(mdp, ps.as_policy(space), space.fresh_uniform())) << '\n';
    }
    if (!out.empty()) {
        SweepSpec one = spec;
        one.name = "simulate";
        one.grid = {0.0};
        SweepPoint pt;
        pt.value = 0.0;
        pt.params = spec.base;
        PolicyPoint pp;
        pp.kind = ps.kind;
        pp.sim = r;
        pt.policies.push_back(pp);
        std::ofstream os(out);
        if (!os) throw ConfigError("cannot write " + out);
        write_sweep_csv(os, SweepResult{one, {pt}});
    }
    return 0;
}

int cmd_sweep(const CommonOptions& o, bool no_sim, const std::string& out) {
    SweepSpec spec = sweep_from_json(gather_config(o));
    if (no_sim) spec.simulate = false;
    warn(spec.base);
    const SweepResult r = run_sweep(spec);
    if (out.empty() || out == "-") {
        write_sweep_csv(std::cout, r);
    } else {
        std::ofstream os(out);
        if (!os) throw ConfigError("cannot write " + out);
        write_sweep_csv(os, r);
        std::cerr << "wrote " << out << '\n';
    }
    return 0;
}

int cmd_validate(const std::string& level, const std::string& config) {
    if (!config.empty()) (void)read_config_file(config);
    if (level != "quick" && level != "full") throw ConfigError("level must be quick or full");
    const auto results = validate(level == "full" ? ValidationLevel::full : ValidationLevel::quick);
    return print_report(std::cout, results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pull-based remote tracking of two Markov sources with correlated observations"};
    app.require_subcommand(1);

    CommonOptions solve_opts, sim_opts, sweep_opts;
    std::string solve_policy = "optimal_rvia", solve_out;
    auto* solve = app.add_subcommand("solve", "solve the tracking MDP and optionally write the policy table");
    add_common(solve, solve_opts);
    solve->add_option("--policy", solve_policy, "optimal_rvia or age_optimal_rvia");
    solve->add_option("-o,--output", solve_out, "policy file to write");

    std::string sim_policy = "optimal_rvia", sim_policy_file, sim_out;
    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo simulation of one policy");
    add_common(simulate, sim_opts);
    simulate->add_option("--policy", sim_policy, "policy kind");
    simulate->add_option("--policy-file", sim_policy_file, "use a solved policy file instead of solving");
    simulate->add_option("-o,--output", sim_out, "CSV file to write");

    bool no_sim = false;
    std::string sweep_out;
    auto* sweep = app.add_subcommand("sweep", "parameter sweep to CSV");
    add_common(sweep, sweep_opts);
    sweep->add_flag("--no-sim", no_sim, "exact evaluation only");
    sweep->add_option("-o,--output", sweep_out, "CSV file to write (default stdout)");

    std::string level = "quick", validate_config;
    auto* val = app.add_subcommand("validate", "run the self-check report");
    val->add_option("--level", level, "quick or full");
    val->add_option("-c,--config", validate_config, "config file to check for readability");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (*solve) return cmd_solve(solve_opts, solve_policy, solve_out);
        if (*simulate) return cmd_simulate(sim_opts, sim_policy, sim_policy_file, sim_out);
        if (*sweep) return cmd_sweep(sweep_opts, no_sim, sweep_out);
        if (*val) return cmd_validate(level, validate_config);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_usage;
}
