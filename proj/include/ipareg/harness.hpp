#ifndef IPAREG_HARNESS_HPP
#define IPAREG_HARNESS_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ipareg/controller.hpp"
#include "ipareg/plants.hpp"

namespace ipareg {

enum class PlantKind { Ooo, Analytic, Md1 };

/// Everything one closed-loop experiment needs.  Frequencies are stored in
/// Hz; config files and CLI flags take GHz for the core plant and convert
/// on parse.
struct ExperimentConfig {
    PlantKind plant = PlantKind::Ooo;
    long cycles = 200;
    std::uint64_t seed = 1;
    std::string out_prefix = "out/run";

    double setpoint = 0.0;
    double u0 = 0.0;

    // controller policy
    double xi = 1.0;
    std::optional<Interval> interval;
    std::optional<FrequencyGrid> grid;
    double derivative_floor = 1e-12;
    long offset_window_start = -1; // -1: window opens at the rise cycle

    // out-of-order core plant
    DerivMethod deriv_method = DerivMethod::ExactIpa;
    long instructions_per_cycle = 100000;
    std::optional<std::string> trace_file;
    WorkloadProfile workload;

    // analytic plant
    JKind j = JKind::Quadratic;
    double j_coeff = 1.0;
    NoiseSpec noise;

    // M/D/1 plant
    double md1_arrival_rate = 0.5;
    double md1_cycle_seconds = 40.0;

    ControllerPolicy policy() const {
        return {xi, interval, grid, derivative_floor};
    }

    double cycle_length() const {
        switch (plant) {
            case PlantKind::Ooo: return static_cast<double>(instructions_per_cycle);
            case PlantKind::Analytic: return 1.0;
            default: return md1_cycle_seconds;
        }
    }

    void validate() const {
        if (!(setpoint > 0.0))
            throw ConfigError("setpoint must be positive");
        if (cycles < 1)
            throw ConfigError("cycle count must be at least 1");
        if (plant != PlantKind::Analytic && !(u0 > 0.0))
            throw ConfigError("initial input must be positive");
        if (interval && (u0 < interval->lo || u0 > interval->hi))
            throw ConfigError("initial input lies outside the projection interval");
        policy().validate();
        if (plant == PlantKind::Ooo) {
            if (instructions_per_cycle < 1)
                throw ConfigError("instructions per cycle must be positive");
            if (!trace_file) workload.validate();
        }
        if (plant == PlantKind::Md1) {
            if (!(md1_arrival_rate > 0.0))
                throw ConfigError("arrival rate must be positive");
            if (!(md1_cycle_seconds > 0.0))
                throw ConfigError("cycle duration must be positive");
        }
    }
};

/// One row of the per-cycle record.
struct CycleReport {
    long cycle = 0;
    double time_s = 0.0;     // cumulative plant time at cycle end
    double u = 0.0;          // input held during the cycle (Hz for the core plant)
    double y = 0.0;
    double e = 0.0;
    double gain = 0.0;       // gain computed from this cycle's measurement
    double deriv_est = 0.0;
    DerivMethod method = DerivMethod::ExactIpa;
    double zeta = 0.0;
    bool saturated_low = false;
    bool saturated_high = false;
    bool rejected = false;
    bool gain_held = false;
};

struct RunSummary {
    long rise_time_cycles = -1; // first cycle with y >= setpoint, -1 if never
    long window_start = 0;
    double avg_offset = 0.0;    // mean of (y - setpoint) over [window_start, end)
    double saturation_fraction_low = 0.0;
    double saturation_fraction_high = 0.0;
    double mean_abs_zeta = 0.0;
    double setpoint = 0.0;
    std::vector<CycleReport> series;
};

inline std::unique_ptr<Plant> make_plant(const ExperimentConfig& cfg) {
    switch (cfg.plant) {
        case PlantKind::Ooo: {
            if (cfg.trace_file)
                return std::make_unique<OooPlant>(read_trace_file(*cfg.trace_file),
                                                  cfg.deriv_method);
            WorkloadProfile profile = cfg.workload;
            profile.seed = derive_seed(cfg.seed, 1);
            return std::make_unique<OooPlant>(profile, cfg.deriv_method);
        }
        case PlantKind::Analytic: {
            NoiseSpec noise = cfg.noise;
            noise.seed = derive_seed(cfg.seed, 2);
            return std::make_unique<AnalyticPlant>(cfg.j, cfg.j_coeff, noise);
        }
        default:
            return std::make_unique<Md1Plant>(cfg.md1_arrival_rate, derive_seed(cfg.seed, 3));
    }
}

namespace detail {

inline bool at_extreme_low(const ControllerPolicy& p, double u) {
    if (p.interval && u <= p.interval->lo) return true;
    if (p.grid && u == p.grid->points.front()) return true;
    return false;
}

inline bool at_extreme_high(const ControllerPolicy& p, double u) {
    if (p.interval && u >= p.interval->hi) return true;
    if (p.grid && u == p.grid->points.back()) return true;
    return false;
}

} // namespace detail

/// Runs the closed loop: measure the cycle with the input held constant,
/// then apply the updated input at the next cycle boundary.  Fully
/// reproducible from the config seed.
inline RunSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    auto plant = make_plant(cfg);
    const ControllerPolicy policy = cfg.policy();

    ControllerState state;
    state.u = cfg.u0;
    state.policy = policy;

    RunSummary summary;
    summary.setpoint = cfg.setpoint;
    summary.series.reserve(static_cast<std::size_t>(cfg.cycles));

    double elapsed = 0.0;
    for (long n = 0; n < cfg.cycles; ++n) {
        PlantResponse resp;
        try {
            resp = plant->run_cycle(state.u, cfg.cycle_length());
        } catch (const std::exception& e) {
            throw std::runtime_error("cycle " + std::to_string(n) + ": " + e.what());
        }
        resp.cycle_index = n;
        const StepResult res = step(state, resp, cfg.setpoint);
        elapsed += resp.duration_s;

        CycleReport row;
        row.cycle = n;
        row.time_s = elapsed;
        row.u = state.u;
        row.y = resp.y;
        row.e = cfg.setpoint - resp.y;
        row.gain = res.state.gain;
        row.deriv_est = resp.derivative.value;
        row.method = resp.derivative.method;
        row.zeta = resp.derivative.zeta;
        row.saturated_low = detail::at_extreme_low(policy, state.u);
        row.saturated_high = detail::at_extreme_high(policy, state.u);
        row.rejected = res.flags.rejected;
        row.gain_held = res.flags.gain_held;
        summary.series.push_back(row);

        if (summary.rise_time_cycles < 0 && std::isfinite(resp.y) && resp.y >= cfg.setpoint)
            summary.rise_time_cycles = n;

        state = res.state;
    }

    long wstart = summary.rise_time_cycles < 0 ? 0 : summary.rise_time_cycles;
    if (cfg.offset_window_start >= 0)
        wstart = std::max(wstart, cfg.offset_window_start);
    summary.window_start = std::min<long>(wstart, cfg.cycles);

    double offset_acc = 0.0;
    long offset_n = 0;
    double zeta_acc = 0.0;
    long low = 0, high = 0;
    for (const CycleReport& row : summary.series) {
        if (row.cycle >= summary.window_start && std::isfinite(row.y)) {
            offset_acc += row.y - cfg.setpoint;
            ++offset_n;
        }
        zeta_acc += std::abs(row.zeta);
        low += row.saturated_low ? 1 : 0;
        high += row.saturated_high ? 1 : 0;
    }
    summary.avg_offset = offset_n > 0 ? offset_acc / static_cast<double>(offset_n) : 0.0;
    summary.saturation_fraction_low =
        static_cast<double>(low) / static_cast<double>(cfg.cycles);
    summary.saturation_fraction_high =
        static_cast<double>(high) / static_cast<double>(cfg.cycles);
    summary.mean_abs_zeta = zeta_acc / static_cast<double>(cfg.cycles);
    return summary;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(parent, ec);
    }
    std::ofstream os(path);
    if (!os)
        throw ConfigError("cannot open output file: " + path);
    return os;
}

} // namespace detail

inline const char* cycles_csv_header() {
    return "cycle,time_s,u_Hz,y_ips,e,A,deriv_est,deriv_method,saturated_low,saturated_high";
}

inline const char* summary_csv_header() {
    return "cycles,setpoint,rise_time_cycles,window_start,avg_offset,"
           "saturation_fraction_low,saturation_fraction_high,mean_abs_zeta";
}

/// Writes the per-cycle CSV, the one-row summary CSV, and the two
/// plot-ready series (throughput and input against plant time).
/// Identical summaries produce byte-identical files.
inline void emit_reports(const RunSummary& summary, const std::string& prefix) {
    using detail::fmt;
    {
        auto os = detail::open_out(prefix + "_cycles.csv");
        os << cycles_csv_header() << "\n";
        for (const CycleReport& r : summary.series) {
            os << r.cycle << ',' << fmt(r.time_s) << ',' << fmt(r.u) << ',' << fmt(r.y)
               << ',' << fmt(r.e) << ',' << fmt(r.gain) << ',' << fmt(r.deriv_est) << ','
               << to_string(r.method) << ',' << (r.saturated_low ? 1 : 0) << ','
               << (r.saturated_high ? 1 : 0) << "\n";
        }
        if (!os) throw ConfigError("error writing " + prefix + "_cycles.csv");
    }
    {
        auto os = detail::open_out(prefix + "_summary.csv");
        os << summary_csv_header() << "\n";
        os << summary.series.size() << ',' << fmt(summary.setpoint) << ','
           << summary.rise_time_cycles << ',' << summary.window_start << ','
           << fmt(summary.avg_offset) << ',' << fmt(summary.saturation_fraction_low) << ','
           << fmt(summary.saturation_fraction_high) << ',' << fmt(summary.mean_abs_zeta)
           << "\n";
        if (!os) throw ConfigError("error writing " + prefix + "_summary.csv");
    }
    {
        auto os = detail::open_out(prefix + "_throughput_vs_time.csv");
        os << "time_s,y_ips\n";
        for (const CycleReport& r : summary.series)
            os << fmt(r.time_s) << ',' << fmt(r.y) << "\n";
        if (!os) throw ConfigError("error writing " + prefix + "_throughput_vs_time.csv");
    }
    {
        auto os = detail::open_out(prefix + "_frequency_vs_time.csv");
        os << "time_s,u_Hz\n";
        for (const CycleReport& r : summary.series)
            os << fmt(r.time_s) << ',' << fmt(r.u) << "\n";
        if (!os) throw ConfigError("error writing " + prefix + "_frequency_vs_time.csv");
    }
}

} // namespace ipareg

#endif // IPAREG_HARNESS_HPP
