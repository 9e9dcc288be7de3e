// Acceptance suite: runs every criterion and prints one PASS/FAIL line per
// criterion.  Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ipareg/config.hpp"
#include "ipareg/harness.hpp"
#include "test_util.hpp"

using namespace ipareg;
using namespace testutil;
namespace fs = std::filesystem;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& what) {
    if (!ok) throw Failure(what);
}

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --------------------------------------------------------------------------
// 1. Hand-traced event-time oracles.
// --------------------------------------------------------------------------
std::string c1_hand_trace() {
    {
        const Trace t = make_trace({comp(1, 0, 2)});
        const TimingResult r = compute_timing(t, 1.0);
        require(r.arrival[0] == 0.0 && r.exec_start[0] == 1.0 && r.exec_end[0] == 3.0 &&
                    r.commit[0] == 4.0 && r.throughput == 0.25,
                "single instruction mismatch");
    }
    {
        const Trace t = make_trace({comp(1, 0, 2), comp(2, 0, 1, 1)});
        const TimingResult r = compute_timing(t, 1.0);
        require(r.exec_start[1] == 4.0 && r.exec_end[1] == 5.0 && r.commit[1] == 6.0 &&
                    r.throughput == 2.0 / 6.0,
                "dependency chain mismatch");
    }
    {
        const Trace t =
            make_trace({mem_miss(1, 0, 1, 0, 10.0), mem_miss(2, 5, 1, 0, 10.0)}, 1);
        const TimingResult r = compute_timing(t, 1.0);
        require(r.exec_start[1] == r.exec_end[0] + 1.0,
                "second miss must chain off the queue head");
        require(r.exec_end[0] == 13.0 && r.commit[0] == 14.0 && r.exec_start[1] == 14.0 &&
                    r.exec_end[1] == 26.0 && r.commit[1] == 27.0,
                "capacity-1 queue mismatch");
    }
    return "3 hand-traced scenarios exact";
}

// --------------------------------------------------------------------------
// 2. Exact sample derivative against central finite differences.
// --------------------------------------------------------------------------
std::string c2_gradient() {
    int checked = 0, switched = 0;
    const double ghz[] = {0.93, 1.57, 2.83};
    for (std::uint64_t seed = 1; seed <= 120; ++seed) {
        const Trace t = generate(random_profile(seed), 1000);
        const double u = ghz[seed % 3] * 1e9;
        const double tau = 1.0 / u;
        const FdResult fd = fd_throughput_derivative(t, tau);
        if (fd.order_change) {
            ++switched;
            continue;
        }
        const double exact = ipa_derivative(t, tau).value;
        require(std::abs(exact - fd.dy_du) <= 1e-6 * std::max(1.0, std::abs(fd.dy_du)),
                "trace " + std::to_string(seed) + ": ipa " + fmt_num(exact) + " vs fd " +
                    fmt_num(fd.dy_du));
        ++checked;
    }
    require(checked >= 100, "only " + std::to_string(checked) + " traces checked");
    return std::to_string(checked) + " traces within 1e-6; " + std::to_string(switched) +
           " excluded at detected order switches";
}

// --------------------------------------------------------------------------
// 3. Zero-miss linearity and quotient/derivative identity.
// --------------------------------------------------------------------------
std::string c3_linearity() {
    WorkloadProfile p = random_profile(64);
    p.base.miss_rate = 0.0;
    const Trace t = generate(p, 1000);
    const double freqs[] = {1.0e9, 1.7e9, 2.2e9, 3.4e9, 5.0e9};
    double slope0 = 0.0;
    double worst_line = 0.0, worst_quot = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double u = freqs[k], tau = 1.0 / u;
        const TimingResult r = compute_timing(t, tau);
        const double slope = r.throughput / u;
        if (k == 0)
            slope0 = slope;
        else
            worst_line = std::max(worst_line, std::abs(slope - slope0) / slope0);
        const double exact = ipa_from_timing(r, tau).value;
        const double quot = ratio_approx(r.throughput, u).value;
        worst_quot = std::max(worst_quot, std::abs(exact - quot) / quot);
    }
    require(worst_line <= 1e-12, "linearity off by " + fmt_num(worst_line));
    // "machine precision" pinned as 1e-12 relative: the commit-time sum
    // accumulates one rounding per instruction, ~N*eps
    require(worst_quot <= 1e-12, "quotient gap " + fmt_num(worst_quot));
    return "y/u constant to " + fmt_num(worst_line) + "; quotient==ipa to " +
           fmt_num(worst_quot);
}

// --------------------------------------------------------------------------
// 4. Newton convergence and two-step decrease on the analytic family.
// --------------------------------------------------------------------------
std::string c4_newton() {
    struct Case {
        JKind j;
        double coeff, setpoint, u0;
        const char* name;
    };
    const Case cases[] = {
        {JKind::Quadratic, 1.0, 4.0, 1.0, "convex increasing"},
        {JKind::Sqrt, 1.0, 2.0, 1.0, "concave increasing"},
        {JKind::Reciprocal, 8.0, 4.0, 1.5, "convex decreasing"},
    };
    int worst_cycle = 0;
    for (const Case& c : cases) {
        AnalyticPlant plant(c.j, c.coeff);
        ControllerState s;
        s.u = c.u0;
        std::vector<double> e;
        int reached = -1;
        for (int n = 0; n < 50; ++n) {
            const PlantResponse resp = plant.run_cycle(s.u, 1.0);
            e.push_back(c.setpoint - resp.y);
            if (reached < 0 && std::abs(e.back()) < 1e-8) reached = n;
            s = step(s, resp, c.setpoint).state;
        }
        require(reached >= 0, std::string(c.name) + ": |e| never below 1e-8");
        worst_cycle = std::max(worst_cycle, reached);
        const double floor = 1e-12 * std::max(1.0, c.setpoint);
        for (std::size_t j = 3; j < e.size(); ++j) {
            if (std::abs(e[j - 2]) < floor) break;
            require(std::abs(e[j]) < std::abs(e[j - 2]),
                    std::string(c.name) + ": two-step decrease fails at cycle " +
                        std::to_string(j));
        }
    }
    return "all J reach |e|<1e-8 by cycle " + std::to_string(worst_cycle) +
           "; |e_j|<|e_j-2| held to the floor";
}

// --------------------------------------------------------------------------
// 5. Error containment under bounded output and slope noise.
// --------------------------------------------------------------------------
std::string c5_containment() {
    const double r = 4.0, delta = 0.01 * r, alpha = 0.1;
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        NoiseSpec noise;
        noise.psi_bound = delta;
        noise.phi_mode = NoiseSpec::PhiMode::RelativeToSlope;
        noise.phi_bound = alpha;
        noise.seed = seed;
        AnalyticPlant plant(JKind::Quadratic, 1.0, noise);
        ControllerState s;
        s.u = 1.0;
        double tail = 0.0;
        for (int n = 0; n < 220; ++n) { // covers cycles 100..200 and change
            const PlantResponse resp = plant.run_cycle(s.u, 1.0);
            if (n >= 100) tail = std::max(tail, std::abs(r - resp.y));
            s = step(s, resp, r).state;
        }
        // the slope error contracts |e| by ~alpha/(1-alpha) per cycle, so
        // the tail should sit near delta; 5*delta leaves a documented margin
        require(tail <= 5.0 * delta,
                "seed " + std::to_string(seed) + ": tail sup " + fmt_num(tail));
        worst = std::max(worst, tail);
    }
    return "20 seeds, tail sup |e| <= " + fmt_num(worst) + " (bound " + fmt_num(5 * delta) +
           ")";
}

// --------------------------------------------------------------------------
// 6. M/D/1 sojourn derivatives equal busy-period ranks.
// --------------------------------------------------------------------------
std::string c6_md1() {
    // 10000 customers in 500-customer blocks: sojourns are differences of
    // nearby absolute times, so short horizons keep the stencil readable
    Rand rng(2024);
    const double theta = 1.0, h = 1e-3;
    int checked = 0, skipped = 0;
    for (int block = 0; block < 20; ++block) {
        std::vector<double> arrivals;
        double t = 0.0;
        for (int k = 0; k < 500; ++k) {
            t += rng.exponential(0.7);
            arrivals.push_back(t);
        }
        const auto ranks = md1_busy_ranks(arrivals, theta);
        const auto lo = md1_sojourns(arrivals, theta - h);
        const auto hi = md1_sojourns(arrivals, theta + h);
        const auto rlo = md1_busy_ranks(arrivals, theta - h);
        const auto rhi = md1_busy_ranks(arrivals, theta + h);
        for (std::size_t j = 0; j < arrivals.size(); ++j) {
            if (rlo[j] != rhi[j]) { // busy periods coalesce inside the stencil
                ++skipped;
                continue;
            }
            const double fd = (hi[j] - lo[j]) / (2.0 * h);
            const double rank = static_cast<double>(ranks[j]);
            require(std::abs(fd - rank) <= 1e-9 * std::max(1.0, rank),
                    "customer " + std::to_string(j) + ": fd " + fmt_num(fd) + " vs rank " +
                        fmt_num(rank));
            ++checked;
        }
    }
    require(checked >= 9500, "too many coalescence exclusions");
    return std::to_string(checked) + " of 10000 customers match to 1e-9; " +
           std::to_string(skipped) + " at coalescence points";
}

// --------------------------------------------------------------------------
// 7. Coarse grid freezes scaled-down steps; the unscaled loop escapes.
// --------------------------------------------------------------------------
std::string c7_stall() {
    ExperimentConfig cfg;
    cfg.plant = PlantKind::Analytic;
    cfg.j = JKind::Linear;
    cfg.j_coeff = 1.0;
    cfg.setpoint = 2.15;
    cfg.u0 = 2.0;
    cfg.cycles = 120;
    cfg.grid = FrequencyGrid::haswell16();
    cfg.xi = 0.2;
    const RunSummary stuck = run_experiment(cfg);
    for (const CycleReport& row : stuck.series)
        require(row.u == 2.0, "scaled loop moved at cycle " + std::to_string(row.cycle));

    cfg.xi = 1.0;
    const RunSummary moving = run_experiment(cfg);
    int first_change = -1;
    for (const CycleReport& row : moving.series)
        if (row.u != 2.0) {
            first_change = static_cast<int>(row.cycle);
            break;
        }
    require(first_change >= 0 && first_change <= 5,
            "unscaled loop did not move within 5 cycles");
    return "xi=0.2 pinned for 120 cycles; xi=1.0 moved at cycle " +
           std::to_string(first_change);
}

// --------------------------------------------------------------------------
// 8. Saturation direction matches the offset sign.
// --------------------------------------------------------------------------
std::string c8_saturation_signs() {
    // memory-heavy phases with an unreachable-high setpoint: the loop pins
    // the frequency at the top and still undershoots
    ExperimentConfig heavy;
    heavy.plant = PlantKind::Ooo;
    heavy.workload = WorkloadProfile::waterns_like(0);
    heavy.instructions_per_cycle = 10000;
    heavy.cycles = 150;
    heavy.seed = 8;
    heavy.deriv_method = DerivMethod::RatioApprox;
    heavy.interval = Interval{0.5e9, 5.0e9};
    heavy.u0 = 1.0e9;
    heavy.setpoint = 2.2e9; // above what the memory phases can deliver at 5 GHz
    const RunSummary a = run_experiment(heavy);
    require(a.saturation_fraction_high > 0.0, "no high-limit saturation");
    require(a.avg_offset < 0.0, "offset not negative: " + fmt_num(a.avg_offset));

    // compute-bound workload with a setpoint below what the lowest grid
    // frequency delivers: the loop pins at the bottom and overshoots
    ExperimentConfig light;
    light.plant = PlantKind::Ooo;
    light.workload = WorkloadProfile::barnes_like(0);
    light.instructions_per_cycle = 10000;
    light.cycles = 150;
    light.seed = 9;
    light.deriv_method = DerivMethod::RatioApprox;
    light.grid = FrequencyGrid::haswell16().scaled(1e9);
    light.u0 = 2.0e9;
    light.setpoint = 2.0e8; // below the 0.8 GHz output
    const RunSummary b = run_experiment(light);
    require(b.saturation_fraction_low > 0.0, "no low-limit saturation");
    require(b.avg_offset > 0.0, "offset not positive: " + fmt_num(b.avg_offset));

    return "high-sat offset " + fmt_num(a.avg_offset) + " (frac " +
           fmt_num(a.saturation_fraction_high) + "); low-sat offset " + fmt_num(b.avg_offset) +
           " (frac " + fmt_num(b.saturation_fraction_low) + ")";
}

// --------------------------------------------------------------------------
// 9. Closed-loop rise time on the default profiles.
// --------------------------------------------------------------------------
std::string c9_rise() {
    std::string detail;
    for (int which = 0; which < 2; ++which) {
        ExperimentConfig cfg;
        cfg.plant = PlantKind::Ooo;
        cfg.workload = which == 0 ? WorkloadProfile::barnes_like(0)
                                  : WorkloadProfile::waterns_like(0);
        cfg.instructions_per_cycle = 10000;
        cfg.cycles = 100;
        cfg.seed = which == 0 ? 31 : 32;
        cfg.deriv_method = DerivMethod::RatioApprox;
        cfg.xi = 0.2;
        cfg.interval = Interval{0.5e9, 5.0e9};
        cfg.u0 = 1.0e9;
        cfg.setpoint = 1.5e9; // reachable around 2.5-3 GHz
        const RunSummary s = run_experiment(cfg);
        require(s.rise_time_cycles >= 5 && s.rise_time_cycles <= 50,
                std::string(which == 0 ? "compute" : "memory") + " profile rise " +
                    std::to_string(s.rise_time_cycles));
        detail += (which == 0 ? "compute rise " : ", memory rise ") +
                  std::to_string(s.rise_time_cycles);
    }
    return detail + " (band 5..50)";
}

// --------------------------------------------------------------------------
// 10. Byte-identical reruns.
// --------------------------------------------------------------------------
std::string c10_determinism() {
    const fs::path tmp = "acceptance_tmp";
    fs::create_directories(tmp);
    ExperimentConfig cfg;
    cfg.plant = PlantKind::Ooo;
    cfg.workload = WorkloadProfile::waterns_like(0);
    cfg.instructions_per_cycle = 5000;
    cfg.cycles = 60;
    cfg.seed = 99;
    cfg.deriv_method = DerivMethod::RatioApprox;
    cfg.grid = FrequencyGrid::haswell16().scaled(1e9);
    cfg.u0 = 1.0e9;
    cfg.setpoint = 1.2e9;

    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::stringstream ss;
        ss << is.rdbuf();
        return ss.str();
    };
    emit_reports(run_experiment(cfg), (tmp / "a").string());
    emit_reports(run_experiment(cfg), (tmp / "b").string());
    for (const char* sfx : {"_cycles.csv", "_summary.csv", "_throughput_vs_time.csv",
                            "_frequency_vs_time.csv"}) {
        const std::string a = slurp(tmp / ("a" + std::string(sfx)));
        const std::string b = slurp(tmp / ("b" + std::string(sfx)));
        require(!a.empty() && a == b, std::string("mismatch in ") + sfx);
    }
    return "4 output files byte-identical across reruns";
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<std::string()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "event-time hand-trace oracle", c1_hand_trace},
        {2, "gradient vs finite differences", c2_gradient},
        {3, "zero-miss linearity", c3_linearity},
        {4, "newton convergence", c4_newton},
        {5, "bounded-noise containment", c5_containment},
        {6, "m/d/1 sojourn derivative", c6_md1},
        {7, "quantization stall", c7_stall},
        {8, "saturation/offset signs", c8_saturation_signs},
        {9, "closed-loop rise band", c9_rise},
        {10, "byte-identical reruns", c10_determinism},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %2d %-34s %6.2fs  %s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs,
                    detail.c_str());
        failures += ok ? 0 : 1;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
