#pragma once

// Text formats: scenario config (JSON), parameter hashing, solved policy
// files and sweep CSV rows.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "pulltrack/distortion.hpp"
#include "pulltrack/policies.hpp"
#include "pulltrack/solver.hpp"
#include "pulltrack/tracking_model.hpp"

namespace pulltrack {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// Canonical one-line rendering of every field that affects a solve.
inline std::string canonical_params(const SystemParams& p) {
    std::ostringstream os;
    os << std::setprecision(17) << "p1=" << p.sources[0].p << ";p2=" << p.sources[1].p << ";q1=" << p.q[0]
       << ";q2=" << p.q[1] << ";rho12=" << p.rho12 << ";rho21=" << p.rho21 << ";w1=" << p.w[0] << ";w2=" << p.w[1]
       << ";alpha=" << p.alpha << ";N=" << p.N;
    for (std::size_t i = 0; i < 2; ++i) {
        os << ";f" << i + 1 << "=";
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 2; ++c) os << p.distortions[i].entries[r][c] << (r + c < 2 ? "," : "");
    }
    return os.str();
}

/// FNV-1a 64 of canonical_params, as 16 hex digits.
inline std::string params_hash(const SystemParams& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_params(p)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace detail {

inline DistortionMatrix parse_distortion(const nlohmann::json& j, bool transpose) {
    DistortionMatrix m;
    if (j.is_string()) {
        const auto preset = distortion_preset(j.get<std::string>());
        if (!preset) throw ConfigError("unknown distortion preset '" + j.get<std::string>() + "'");
        m = *preset;
    } else if (j.is_array() && j.size() == 2 && j[0].is_array() && j[0].size() == 2 && j[1].is_array() &&
               j[1].size() == 2) {
        for (std::size_t r = 0; r < 2; ++r)
            for (std::size_t c = 0; c < 2; ++c) {
                if (!j[r][c].is_number()) throw ConfigError("distortion entries must be numbers");
                m.entries[r][c] = j[r][c].get<double>();
            }
    } else {
        throw ConfigError("distortion must be a preset name or a 2x2 array");
    }
    return transpose ? m.transposed() : m;
}

inline double number(const nlohmann::json& j, const char* key) {
    if (!j.at(key).is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace detail

/// Overlays the scenario keys present in `j` onto `params`. Recognized keys:
/// p1 p2 q1 q2 rho12 rho21 w1 w2 alpha N distortion1 distortion2 transpose.
/// With transpose=true, matrices are read as [estimate][actual].
inline void apply_params_json(SystemParams& params, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("p1")) params.sources[0].p = detail::number(j, "p1");
    if (j.contains("p2")) params.sources[1].p = detail::number(j, "p2");
    if (j.contains("q1")) params.q[0] = detail::number(j, "q1");
    if (j.contains("q2")) params.q[1] = detail::number(j, "q2");
    if (j.contains("rho12")) params.rho12 = detail::number(j, "rho12");
    if (j.contains("rho21")) params.rho21 = detail::number(j, "rho21");
    if (j.contains("w1")) params.w[0] = detail::number(j, "w1");
    if (j.contains("w2")) params.w[1] = detail::number(j, "w2");
    if (j.contains("alpha")) params.alpha = detail::number(j, "alpha");
    if (j.contains("N")) {
        if (!j.at("N").is_number_integer()) throw ConfigError("config key 'N' must be an integer");
        params.N = j.at("N").get<int>();
    }
    const bool transpose = j.value("transpose", false);
    if (j.contains("distortion1")) params.distortions[0] = detail::parse_distortion(j.at("distortion1"), transpose);
    if (j.contains("distortion2")) params.distortions[1] = detail::parse_distortion(j.at("distortion2"), transpose);
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

inline nlohmann::json params_to_json(const SystemParams& p) {
    auto matrix = [](const DistortionMatrix& m) {
        return nlohmann::json::array({{m.entries[0][0], m.entries[0][1]}, {m.entries[1][0], m.entries[1][1]}});
    };
    return {{"p1", p.sources[0].p}, {"p2", p.sources[1].p}, {"q1", p.q[0]},       {"q2", p.q[1]},
            {"rho12", p.rho12},     {"rho21", p.rho21},     {"w1", p.w[0]},       {"w2", p.w[1]},
            {"alpha", p.alpha},     {"N", p.N},             {"distortion1", matrix(p.distortions[0])},
            {"distortion2", matrix(p.distortions[1])}};
}

/// Solved policy plus the metadata needed to reuse it.
struct PolicyFile {
    std::string params_hash;
    PolicyKind kind = PolicyKind::optimal_rvia;
    PolicyTable table;
};

inline constexpr std::string_view policy_file_magic = "# pulltrack-policy v1";

/// Header lines "# key value", then one "state_index action" line per state.
inline void write_policy(std::ostream& os, const PolicyFile& pf) {
    os << policy_file_magic << '\n'
       << "# params_hash " << pf.params_hash << '\n'
       << "# kind " << to_string(pf.kind) << '\n'
       << "# N " << table_depth(pf.table) << '\n'
       << "# n_states " << pf.table.actions.size() << '\n'
       << "# average_cost " << format_double(pf.table.average_cost) << '\n'
       << "# residual " << format_double(pf.table.residual) << '\n'
       << "# iterations " << pf.table.iterations << '\n'
       << "# ref_state " << pf.table.ref_state << '\n';
    for (std::size_t s = 0; s < pf.table.actions.size(); ++s) os << s << ' ' << pf.table.actions[s] << '\n';
}

inline PolicyFile read_policy(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != policy_file_magic) throw ConfigError("not a pulltrack policy file");
    PolicyFile pf;
    std::size_t n_states = 0;
    bool have_kind = false;
    while (is.peek() == '#') {
        std::getline(is, line);
        std::istringstream ls(line.substr(1));
        std::string key;
        ls >> key;
        if (key == "params_hash") ls >> pf.params_hash;
        else if (key == "kind") {
            std::string k;
            ls >> k;
            const auto kind = parse_policy_kind(k);
            if (!kind) throw ConfigError("unknown policy kind '" + k + "'");
            pf.kind = *kind;
            have_kind = true;
        } else if (key == "n_states") ls >> n_states;
        else if (key == "average_cost") ls >> pf.table.average_cost;
        else if (key == "residual") ls >> pf.table.residual;
        else if (key == "iterations") ls >> pf.table.iterations;
        else if (key == "ref_state") ls >> pf.table.ref_state;
    }
    if (!have_kind || n_states == 0) throw ConfigError("policy file header is incomplete");
    pf.table.actions.assign(n_states, -1);
    std::size_t s = 0;
    int a = 0;
    std::size_t count = 0;
    while (is >> s >> a) {
        if (s >= n_states || a < 0 || a >= static_cast<int>(n_actions)) throw ConfigError("policy entry out of range");
        pf.table.actions[s] = a;
        ++count;
    }
    if (count != n_states) throw ConfigError("policy file has " + std::to_string(count) + " entries, expected " +
                                             std::to_string(n_states));
    for (int act : pf.table.actions)
        if (act < 0) throw ConfigError("policy file is missing states");
    table_depth(pf.table);
    return pf;
}

inline void save_policy(const std::string& path, const PolicyFile& pf) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    write_policy(os, pf);
}

inline PolicyFile load_policy(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path);
    return read_policy(is);
}

}  // namespace pulltrack
