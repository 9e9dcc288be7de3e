#ifndef IPAREG_WORKLOAD_HPP
#define IPAREG_WORKLOAD_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ipareg/errors.hpp"
#include "ipareg/rng.hpp"
#include "ipareg/trace.hpp"

namespace ipareg {

/// Bounded-support discrete distribution.  Heavy tails are deliberately
/// impossible: finite-difference checks downstream need event times to stay
/// inside one linear segment.
struct DiscreteDist {
    struct Entry {
        double value = 0.0;
        double weight = 1.0;
    };
    std::vector<Entry> entries;

    static DiscreteDist constant(double v) { return {{{v, 1.0}}}; }

    void validate() const {
        if (entries.empty())
            throw ConfigError("discrete distribution must not be empty");
        for (const Entry& e : entries)
            if (!(e.weight > 0.0))
                throw ConfigError("distribution weights must be positive");
    }

    double sample(Rand& rng) const {
        double total = 0.0;
        for (const Entry& e : entries) total += e.weight;
        double x = rng.uniform01() * total;
        for (const Entry& e : entries) {
            x -= e.weight;
            if (x < 0.0) return e.value;
        }
        return entries.back().value;
    }

    double mean() const {
        double total = 0.0, acc = 0.0;
        for (const Entry& e : entries) {
            total += e.weight;
            acc += e.weight * e.value;
        }
        return acc / total;
    }
};

/// Per-instruction sampling parameters; one set per workload phase.
struct SamplingParams {
    double miss_rate = 0.01;  // P(memory instruction that misses cache)
    double hit_rate = 0.20;   // P(memory instruction that hits cache)
    double dep_prob = 0.30;   // P(instruction waits on a recent predecessor)
    int dep_window = 8;       // how far back a dependency may reach
    DiscreteDist exec_cycles{{{1, 0.7}, {2, 0.2}, {3, 0.1}}};
    DiscreteDist cache_cycles = DiscreteDist::constant(2);
    int transfer_cycles = 1;
    DiscreteDist dram_service_s = DiscreteDist::constant(60e-9);
    DiscreteDist interarrival_cycles{{{0, 0.2}, {1, 0.6}, {2, 0.2}}};

    void validate() const {
        if (miss_rate < 0.0 || hit_rate < 0.0 || miss_rate + hit_rate > 1.0)
            throw ConfigError("miss/hit rates must be probabilities summing to at most 1");
        if (dep_prob < 0.0 || dep_prob > 1.0)
            throw ConfigError("dependency probability must be in [0, 1]");
        if (dep_window < 1)
            throw ConfigError("dependency window must be positive");
        if (transfer_cycles < 0)
            throw ConfigError("transfer cycles must be nonnegative");
        exec_cycles.validate();
        cache_cycles.validate();
        dram_service_s.validate();
        interarrival_cycles.validate();
    }
};

struct WorkloadPhase {
    long length = 0; // instructions
    SamplingParams params;
};

/// Synthetic program description: a base parameter set, optionally
/// overridden by a repeating sequence of phases with exact instruction
/// counts.
struct WorkloadProfile {
    SamplingParams base;
    std::vector<WorkloadPhase> phases; // cycled when exhausted
    int memory_queue_capacity = 8;
    std::uint64_t seed = 0;

    void validate() const {
        base.validate();
        for (const WorkloadPhase& ph : phases) {
            if (ph.length <= 0)
                throw ConfigError("phase length must be positive");
            ph.params.validate();
        }
        if (memory_queue_capacity < 1)
            throw ConfigError("memory queue capacity must be positive");
    }

    /// Compute-bound, memory-light program.
    static WorkloadProfile barnes_like(std::uint64_t seed) {
        WorkloadProfile p;
        p.base.miss_rate = 0.01;
        p.base.hit_rate = 0.20;
        p.base.dram_service_s = DiscreteDist::constant(60e-9);
        p.seed = seed;
        return p;
    }

    /// Memory-intensive program: a light base interleaved with
    /// memory-heavy bursts at exact instruction counts.  The bursts chase
    /// pointers: every instruction waits on its immediate predecessor, so
    /// miss sojourns serialize instead of overlapping and throughput is
    /// pinned by dram latency, not by the clock.
    static WorkloadProfile waterns_like(std::uint64_t seed) {
        WorkloadProfile p;
        SamplingParams light;
        light.miss_rate = 0.02;
        light.hit_rate = 0.25;
        SamplingParams heavy = light;
        heavy.miss_rate = 0.15;
        heavy.hit_rate = 0.35;
        heavy.dep_prob = 1.0;
        heavy.dep_window = 1;
        heavy.dram_service_s = DiscreteDist{{{60e-9, 0.6}, {120e-9, 0.4}}};
        p.base = light;
        // three full heavy bursts inside a default 2e6-instruction run
        p.phases = {{300000, light}, {300000, heavy}};
        p.seed = seed;
        return p;
    }
};

/// Incremental trace source: hands out consecutive cycle-sized traces while
/// walking the profile's phase schedule.  Each emitted trace is standalone
/// (arrival counters restart at zero, no dependencies across the boundary).
class WorkloadStream {
public:
    explicit WorkloadStream(const WorkloadProfile& profile)
        : profile_(profile), rng_(profile.seed) {
        profile_.validate();
    }

    Trace next_trace(long n_instructions) {
        if (n_instructions <= 0)
            throw std::domain_error("instruction count must be positive");
        Trace trace;
        trace.memory_queue_capacity = profile_.memory_queue_capacity;
        trace.instructions.reserve(static_cast<std::size_t>(n_instructions));
        std::int64_t counter = 0;
        for (long i = 1; i <= n_instructions; ++i) {
            const SamplingParams& par = current_params();
            Instruction inst;
            inst.index = static_cast<int>(i);
            inst.arrival_counter =
                i == 1 ? 0
                       : counter + static_cast<std::int64_t>(par.interarrival_cycles.sample(rng_));
            counter = inst.arrival_counter;

            const double roll = rng_.uniform01();
            if (roll < par.miss_rate) {
                inst.kind = InstrKind::Memory;
                inst.cache_hit = false;
                inst.cache_cycles = static_cast<int>(par.cache_cycles.sample(rng_));
                inst.transfer_cycles = par.transfer_cycles;
                inst.dram_service_s = par.dram_service_s.sample(rng_);
            } else if (roll < par.miss_rate + par.hit_rate) {
                inst.kind = InstrKind::Memory;
                inst.cache_hit = true;
                inst.cache_cycles = static_cast<int>(par.cache_cycles.sample(rng_));
            } else {
                inst.kind = InstrKind::Computational;
                inst.exec_cycles = static_cast<int>(par.exec_cycles.sample(rng_));
            }
            if (i >= 2 && par.dep_prob > 0.0 && rng_.bernoulli(par.dep_prob)) {
                const std::uint64_t span =
                    std::min<std::uint64_t>(par.dep_window, static_cast<std::uint64_t>(i - 1));
                inst.dep_index = static_cast<int>(i - 1 - static_cast<long>(rng_.below(span)));
            }
            trace.instructions.push_back(inst);
            advance_phase();
        }
        // catches profiles whose distributions sample illegal values
        validate_trace(trace);
        return trace;
    }

private:
    const SamplingParams& current_params() const {
        if (profile_.phases.empty())
            return profile_.base;
        return profile_.phases[phase_idx_].params;
    }

    void advance_phase() {
        if (profile_.phases.empty())
            return;
        if (++phase_pos_ >= profile_.phases[phase_idx_].length) {
            phase_pos_ = 0;
            phase_idx_ = (phase_idx_ + 1) % profile_.phases.size();
        }
    }

    WorkloadProfile profile_;
    Rand rng_;
    std::size_t phase_idx_ = 0;
    long phase_pos_ = 0;
};

/// One-shot generation; reproducible from the profile seed.
inline Trace generate(const WorkloadProfile& profile, long n_instructions) {
    return WorkloadStream(profile).next_trace(n_instructions);
}

} // namespace ipareg

#endif // IPAREG_WORKLOAD_HPP
