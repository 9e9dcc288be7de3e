#ifndef IPAREG_CONFIG_HPP
#define IPAREG_CONFIG_HPP

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ipareg/harness.hpp"

namespace ipareg {

// Flat key = value experiment configuration.  '#' starts a comment.  CLI
// flags override file values by being applied after them.  Frequencies
// (u0, interval bounds, grid points) are given in GHz for the core plant
// and converted to Hz here; analytic and M/D/1 plants use natural units.

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + v + "'");
    }
}

inline long to_long(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad integer value for " + key + ": '" + v + "'");
    }
}

/// "v:w,v:w,..." or a single "v" for a point mass.
inline DiscreteDist to_dist(const std::string& key, const std::string& v, double scale = 1.0) {
    DiscreteDist dist;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        DiscreteDist::Entry e;
        if (colon == std::string::npos) {
            e.value = to_double(key, item) * scale;
            e.weight = 1.0;
        } else {
            e.value = to_double(key, item.substr(0, colon)) * scale;
            e.weight = to_double(key, item.substr(colon + 1));
        }
        dist.entries.push_back(e);
    }
    if (dist.entries.empty())
        throw ConfigError("empty distribution for " + key);
    return dist;
}

inline bool apply_sampling_key(SamplingParams& p, const std::string& field,
                               const std::string& key, const std::string& v) {
    if (field == "miss_rate") p.miss_rate = to_double(key, v);
    else if (field == "hit_rate") p.hit_rate = to_double(key, v);
    else if (field == "dep_prob") p.dep_prob = to_double(key, v);
    else if (field == "dep_window") p.dep_window = static_cast<int>(to_long(key, v));
    else if (field == "transfer_cycles") p.transfer_cycles = static_cast<int>(to_long(key, v));
    else if (field == "exec_cycles") p.exec_cycles = to_dist(key, v);
    else if (field == "cache_cycles") p.cache_cycles = to_dist(key, v);
    else if (field == "dram_service_ns") p.dram_service_s = to_dist(key, v, 1e-9);
    else if (field == "interarrival") p.interarrival_cycles = to_dist(key, v);
    else return false;
    return true;
}

} // namespace detail

inline std::map<std::string, std::string> parse_config_text(std::istream& is,
                                                            const std::string& origin) {
    std::map<std::string, std::string> map;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected key = value");
        map[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return map;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open config file: " + path);
    return parse_config_text(is, path);
}

/// "key=value" strings, e.g. from repeated --set flags.
inline void apply_overrides(std::map<std::string, std::string>& map,
                            const std::vector<std::string>& overrides) {
    for (const std::string& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos)
            throw ConfigError("override must be key=value: '" + o + "'");
        map[detail::trim(o.substr(0, eq))] = detail::trim(o.substr(eq + 1));
    }
}

/// Builds a validated ExperimentConfig from parsed keys.  Unknown keys are
/// errors so typos do not silently fall back to defaults.
inline ExperimentConfig config_from_map(std::map<std::string, std::string> map) {
    using detail::to_double;
    using detail::to_long;
    ExperimentConfig cfg;

    auto take = [&](const char* key) -> std::optional<std::string> {
        auto it = map.find(key);
        if (it == map.end()) return std::nullopt;
        std::string v = it->second;
        map.erase(it);
        return v;
    };

    if (auto v = take("plant")) {
        if (*v == "ooo") cfg.plant = PlantKind::Ooo;
        else if (*v == "analytic") cfg.plant = PlantKind::Analytic;
        else if (*v == "md1") cfg.plant = PlantKind::Md1;
        else throw ConfigError("plant must be ooo, analytic, or md1");
    }
    const bool ghz_units = cfg.plant == PlantKind::Ooo;
    const double unit = ghz_units ? 1e9 : 1.0;

    if (auto v = take("cycles")) cfg.cycles = to_long("cycles", *v);
    if (auto v = take("seed")) cfg.seed = static_cast<std::uint64_t>(to_long("seed", *v));
    if (auto v = take("out")) cfg.out_prefix = *v;
    if (auto v = take("setpoint")) cfg.setpoint = to_double("setpoint", *v);
    if (auto v = take("u0")) cfg.u0 = to_double("u0", *v) * unit;
    if (auto v = take("xi")) cfg.xi = to_double("xi", *v);
    if (auto v = take("derivative_floor"))
        cfg.derivative_floor = to_double("derivative_floor", *v);

    const auto lo = take("interval_lo");
    const auto hi = take("interval_hi");
    if (lo.has_value() != hi.has_value())
        throw ConfigError("interval_lo and interval_hi must be given together");
    if (lo)
        cfg.interval = Interval{to_double("interval_lo", *lo) * unit,
                                to_double("interval_hi", *hi) * unit};

    if (auto v = take("grid")) {
        if (*v == "none") {
            cfg.grid.reset();
        } else {
            FrequencyGrid g =
                *v == "haswell"
                    ? FrequencyGrid::haswell16()
                    : FrequencyGrid{[&] {
                          std::vector<double> pts;
                          std::stringstream ss(*v);
                          std::string item;
                          while (std::getline(ss, item, ','))
                              pts.push_back(to_double("grid", detail::trim(item)));
                          return pts;
                      }()};
            cfg.grid = g.scaled(unit);
            cfg.grid->validate();
        }
    }

    if (auto v = take("offset_window_start")) {
        if (*v == "rise") cfg.offset_window_start = -1;
        else cfg.offset_window_start = to_long("offset_window_start", *v);
    }

    if (auto v = take("deriv_method")) {
        if (*v == "ipa") cfg.deriv_method = DerivMethod::ExactIpa;
        else if (*v == "ratio") cfg.deriv_method = DerivMethod::RatioApprox;
        else throw ConfigError("deriv_method must be ipa or ratio");
    }
    if (auto v = take("instructions_per_cycle"))
        cfg.instructions_per_cycle = to_long("instructions_per_cycle", *v);
    if (auto v = take("trace_file")) cfg.trace_file = *v;

    if (auto v = take("workload")) {
        if (*v == "barnes") cfg.workload = WorkloadProfile::barnes_like(0);
        else if (*v == "waterns") cfg.workload = WorkloadProfile::waterns_like(0);
        else if (*v != "custom")
            throw ConfigError("workload must be barnes, waterns, or custom");
    }
    if (auto v = take("wl.queue_capacity"))
        cfg.workload.memory_queue_capacity = static_cast<int>(to_long("wl.queue_capacity", *v));

    // Remaining wl.* keys override the base sampling parameters; phase.N.*
    // keys replace any preset phases.
    std::map<long, std::pair<long, std::map<std::string, std::string>>> phase_keys;
    for (auto it = map.begin(); it != map.end();) {
        const std::string& key = it->first;
        if (key.rfind("wl.", 0) == 0) {
            if (!detail::apply_sampling_key(cfg.workload.base, key.substr(3), key, it->second))
                throw ConfigError("unknown workload key: " + key);
            it = map.erase(it);
        } else if (key.rfind("phase.", 0) == 0) {
            const auto rest = key.substr(6);
            const auto dot = rest.find('.');
            if (dot == std::string::npos)
                throw ConfigError("phase keys look like phase.N.param: " + key);
            const long idx = to_long(key, rest.substr(0, dot));
            auto& slot = phase_keys[idx];
            if (rest.substr(dot + 1) == "length")
                slot.first = to_long(key, it->second);
            else
                slot.second[rest.substr(dot + 1)] = it->second;
            it = map.erase(it);
        } else {
            ++it;
        }
    }
    if (!phase_keys.empty()) {
        cfg.workload.phases.clear();
        long expect = 0;
        for (const auto& [idx, slot] : phase_keys) {
            if (idx != expect++)
                throw ConfigError("phase indices must be contiguous from 0");
            if (slot.first <= 0)
                throw ConfigError("phase." + std::to_string(idx) + ".length is required");
            WorkloadPhase ph{slot.first, cfg.workload.base};
            for (const auto& [field, value] : slot.second)
                if (!detail::apply_sampling_key(ph.params, field,
                                                "phase." + std::to_string(idx) + "." + field,
                                                value))
                    throw ConfigError("unknown phase key: phase." + std::to_string(idx) + "." +
                                      field);
            cfg.workload.phases.push_back(std::move(ph));
        }
    }

    if (auto v = take("analytic.j")) {
        if (*v == "linear") cfg.j = JKind::Linear;
        else if (*v == "quadratic") cfg.j = JKind::Quadratic;
        else if (*v == "sqrt") cfg.j = JKind::Sqrt;
        else if (*v == "reciprocal") cfg.j = JKind::Reciprocal;
        else throw ConfigError("analytic.j must be linear, quadratic, sqrt, or reciprocal");
    }
    if (auto v = take("analytic.coeff")) cfg.j_coeff = to_double("analytic.coeff", *v);
    if (auto v = take("noise.psi_bound")) cfg.noise.psi_bound = to_double("noise.psi_bound", *v);
    if (auto v = take("noise.phi_bound")) cfg.noise.phi_bound = to_double("noise.phi_bound", *v);
    if (auto v = take("noise.phi_mode")) {
        if (*v == "additive") cfg.noise.phi_mode = NoiseSpec::PhiMode::Additive;
        else if (*v == "relslope") cfg.noise.phi_mode = NoiseSpec::PhiMode::RelativeToSlope;
        else throw ConfigError("noise.phi_mode must be additive or relslope");
    }
    if (auto v = take("md1.arrival_rate"))
        cfg.md1_arrival_rate = to_double("md1.arrival_rate", *v);
    if (auto v = take("md1.cycle_seconds"))
        cfg.md1_cycle_seconds = to_double("md1.cycle_seconds", *v);

    if (!map.empty())
        throw ConfigError("unknown config key: " + map.begin()->first);
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path,
                                    const std::vector<std::string>& overrides = {}) {
    auto map = parse_config_file(path);
    apply_overrides(map, overrides);
    return config_from_map(std::move(map));
}

} // namespace ipareg

#endif // IPAREG_CONFIG_HPP
