#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <vector>

#include "ipareg/config.hpp"
#include "ipareg/harness.hpp"

namespace fs = std::filesystem;
using namespace ipareg;

namespace {

void print_summary(const std::string& name, const RunSummary& s) {
    std::printf("%s: cycles=%zu setpoint=%.6g\n", name.c_str(), s.series.size(), s.setpoint);
    if (s.rise_time_cycles >= 0)
        std::printf("  rise_time_cycles=%ld\n", s.rise_time_cycles);
    else
        std::printf("  rise_time_cycles=never\n");
    std::printf("  avg_offset=%.6g (window from cycle %ld)\n", s.avg_offset, s.window_start);
    std::printf("  saturation_low=%.3f saturation_high=%.3f\n", s.saturation_fraction_low,
                s.saturation_fraction_high);
}

int run_one(const std::string& config_path, const std::vector<std::string>& sets,
            const std::string& out_override) {
    ExperimentConfig cfg = load_config(config_path, sets);
    if (!out_override.empty()) cfg.out_prefix = out_override;
    const RunSummary summary = run_experiment(cfg);
    emit_reports(summary, cfg.out_prefix);
    print_summary(config_path, summary);
    std::printf("  wrote %s_{cycles,summary,throughput_vs_time,frequency_vs_time}.csv\n",
                cfg.out_prefix.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-loop throughput regulation experiments"};
    app.require_subcommand(1);

    std::vector<std::string> sets;
    std::string config_path, out_path, dir_path;
    long count = 0;
    double from_ghz = 0.8, to_ghz = 3.4;
    int points = 14;
    long instructions = 20000;

    const auto add_set = [&](CLI::App* sub) {
        sub->add_option("--set", sets, "override a config key, e.g. --set seed=3");
    };

    auto* run = app.add_subcommand("run", "run one closed-loop experiment");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_path, "output prefix (overrides config)");
    add_set(run);

    auto* batch = app.add_subcommand("batch", "run every *.cfg in a directory");
    batch->add_option("--dir", dir_path, "directory of config files")->required();
    add_set(batch);

    auto* gen = app.add_subcommand("gen-trace", "generate a workload trace file");
    gen->add_option("--config", config_path, "config with workload keys")->required();
    gen->add_option("--count", count, "number of instructions")->required();
    gen->add_option("--out", out_path, "trace file path")->required();
    add_set(gen);

    auto* sweep = app.add_subcommand("sweep",
                                     "frequency sweep: output and derivative curves");
    sweep->add_option("--config", config_path, "config with workload keys")->required();
    sweep->add_option("--from", from_ghz, "lowest frequency, GHz");
    sweep->add_option("--to", to_ghz, "highest frequency, GHz");
    sweep->add_option("--points", points, "number of frequencies");
    sweep->add_option("--instructions", instructions, "trace length");
    sweep->add_option("--out", out_path, "output csv path")->required();
    add_set(sweep);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return run_one(config_path, sets, out_path);

        if (batch->parsed()) {
            std::vector<fs::path> configs;
            for (const auto& entry : fs::directory_iterator(dir_path))
                if (entry.path().extension() == ".cfg") configs.push_back(entry.path());
            std::sort(configs.begin(), configs.end());
            if (configs.empty()) {
                std::fprintf(stderr, "no .cfg files in %s\n", dir_path.c_str());
                return 1;
            }
            int failures = 0;
            for (const auto& p : configs) {
                try {
                    run_one(p.string(), sets, "");
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "%s: %s\n", p.string().c_str(), e.what());
                    ++failures;
                }
            }
            return failures == 0 ? 0 : 1;
        }

        if (gen->parsed()) {
            ExperimentConfig cfg = load_config(config_path, sets);
            WorkloadProfile profile = cfg.workload;
            profile.seed = derive_seed(cfg.seed, 1);
            write_trace_file(generate(profile, count), out_path);
            std::printf("wrote %ld instructions to %s\n", count, out_path.c_str());
            return 0;
        }

        if (sweep->parsed()) {
            ExperimentConfig cfg = load_config(config_path, sets);
            Trace trace;
            if (cfg.trace_file) {
                trace = read_trace_file(*cfg.trace_file);
            } else {
                WorkloadProfile profile = cfg.workload;
                profile.seed = derive_seed(cfg.seed, 1);
                trace = generate(profile, instructions);
            }
            if (points < 2 || !(from_ghz > 0.0) || !(to_ghz > from_ghz)) {
                std::fprintf(stderr, "sweep needs 0 < from < to and at least 2 points\n");
                return 1;
            }
            auto os = detail::open_out(out_path);
            os << "u_Hz,y_ips,dy_du_ipa,dy_du_ratio\n";
            for (int k = 0; k < points; ++k) {
                const double u =
                    (from_ghz + (to_ghz - from_ghz) * k / (points - 1)) * 1e9;
                const double tau = 1.0 / u;
                const TimingResult timing = compute_timing(trace, tau);
                os << detail::fmt(u) << ',' << detail::fmt(timing.throughput) << ','
                   << detail::fmt(ipa_from_timing(timing, tau).value) << ','
                   << detail::fmt(ratio_approx(timing.throughput, u).value) << "\n";
            }
            if (!os) throw ConfigError("error writing " + out_path);
            std::printf("wrote sweep to %s\n", out_path.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
