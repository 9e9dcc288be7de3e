#ifndef IPAREG_TIMING_HPP
#define IPAREG_TIMING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "ipareg/trace.hpp"

namespace ipareg {

/// Event times of every instruction, their derivatives with respect to the
/// clock period, and the resulting throughput.  Times are seconds; the
/// derivatives are dimensionless (each event time is piecewise linear in
/// the clock period).
struct TimingResult {
    std::vector<double> arrival;          // instruction reaches the instruction queue
    std::vector<double> exec_start;       // execution / cache access begins
    std::vector<double> exec_end;         // execution completes
    std::vector<double> commit;           // departs the instruction queue, program order
    std::vector<double> arrival_dtau;
    std::vector<double> exec_start_dtau;
    std::vector<double> exec_end_dtau;
    std::vector<double> commit_dtau;
    double throughput = 0.0;              // instructions per second, N / commit.back()
    std::uint64_t branch_fingerprint = 0; // identifies which recursion branches fired

    std::size_t size() const { return commit.size(); }
    double commit_last() const { return commit.back(); }
    double commit_last_dtau() const { return commit_dtau.back(); }
};

namespace detail {

inline void fnv_mix(std::uint64_t& h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ULL;
    }
}

// Tie-aware comparison for the max recursions.  Competing event times are
// frequently equal in exact arithmetic (whole numbers of cycles), and which
// side rounding favors would otherwise vary with tau.  A candidate must beat
// the incumbent by more than the slack to displace it, so persistent ties
// always resolve to the earlier-listed argument.  Genuinely distinct events
// are at least a cycle apart, many orders of magnitude above the slack.
inline bool strictly_later(double candidate, double incumbent) {
    const double slack = 1e-12 * std::max(std::abs(candidate), std::abs(incumbent));
    return candidate > incumbent + slack;
}

// A cache miss resident in the memory queue: present during [enter, exit),
// exit = enter + dram service.  exec_end is kept so a stalled arrival can
// chain its start time off the queue head.
struct QueueEntry {
    double enter = 0.0;
    double exit = 0.0;
    double exec_end = 0.0;
    double exec_end_dtau = 0.0;
    int index = 0;

    bool operator<(const QueueEntry& o) const {
        return enter != o.enter ? enter < o.enter : index < o.index;
    }
};

// Memory-queue bookkeeping for arrival-ordered queries.  Issued misses wait
// in `pending` until the query time reaches their queue arrival, sit in
// `active` (ordered by enter, so the FIFO head is at the front) until their
// dram service ends, and are pruned through an exit-ordered heap.  Queries
// come with nondecreasing times, so each entry moves through once.
class MemoryQueueState {
public:
    void issue(const QueueEntry& e) { pending_.push(e); }

    void advance_to(double t) {
        while (!pending_.empty() && !strictly_later(pending_.top().enter, t)) {
            const QueueEntry e = pending_.top();
            pending_.pop();
            if (strictly_later(e.exit, t)) {
                active_.insert(e);
                exits_.push(e);
            }
        }
        while (!exits_.empty() && !strictly_later(exits_.top().exit, t)) {
            active_.erase(exits_.top());
            exits_.pop();
        }
    }

    int occupancy() const { return static_cast<int>(active_.size()); }

    // FIFO head: earliest enter; near-ties (within the comparison slack)
    // resolve to the lowest instruction index.
    const QueueEntry* head() const {
        if (active_.empty()) return nullptr;
        auto it = active_.begin();
        const QueueEntry* best = &*it;
        for (++it; it != active_.end() && !strictly_later(it->enter, best->enter); ++it)
            if (it->index < best->index) best = &*it;
        return best;
    }

private:
    struct EnterGreater {
        bool operator()(const QueueEntry& a, const QueueEntry& b) const {
            return b < a;
        }
    };
    struct ExitGreater {
        bool operator()(const QueueEntry& a, const QueueEntry& b) const {
            return a.exit != b.exit ? a.exit > b.exit : b < a;
        }
    };
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, EnterGreater> pending_;
    std::set<QueueEntry> active_;
    std::priority_queue<QueueEntry, std::vector<QueueEntry>, ExitGreater> exits_;
};

} // namespace detail

/// Computes all event times for one trace at clock period tau.
///
/// Recursions, per instruction i (tau = 1/frequency):
///   arrival   = arrival_counter * tau
///   start     = max{arrival; head-of-memory-queue exec_end, when a memory
///               instruction finds the queue full at its arrival; dependency
///               exec_end, when present} + tau
///   exec_end  = start + exec_cycles*tau                      (computational)
///             = start + cache_cycles*tau                     (cache hit)
///             = start + (cache+transfer)*tau + dram + tau    (cache miss)
///   commit    = max{exec_end, previous commit} + tau
///
/// The start cannot precede arrival even when a dependency resolved early.
/// Ties in every max go to the earlier-listed argument; the derivative
/// follows the selected argument.  The memory-queue-full test happens once,
/// at the arrival instant; a miss occupies a slot from its arrival at the
/// queue until its dram service ends.
inline TimingResult compute_timing(const Trace& trace, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::domain_error("clock period must be positive and finite");
    validate_trace(trace);

    const std::size_t n = trace.size();
    TimingResult r;
    for (auto* v : {&r.arrival, &r.exec_start, &r.exec_end, &r.commit,
                    &r.arrival_dtau, &r.exec_start_dtau, &r.exec_end_dtau, &r.commit_dtau})
        v->resize(n);

    std::uint64_t fp = 0xcbf29ce484222325ULL; // FNV-1a offset basis
    detail::MemoryQueueState queue;
    double commit_prev = 0.0, commit_prev_dtau = 0.0;

    for (std::size_t pos = 0; pos < n; ++pos) {
        const Instruction& inst = trace.instructions[pos];
        const double a = static_cast<double>(inst.arrival_counter) * tau;
        const double da = static_cast<double>(inst.arrival_counter);
        r.arrival[pos] = a;
        r.arrival_dtau[pos] = da;

        // Ready time: latest of arrival, memory-queue availability, operands.
        double ready = a, ready_dtau = da;
        int branch = 0, stall_head = 0;
        if (inst.is_memory()) {
            queue.advance_to(a);
            const detail::QueueEntry* head = queue.head();
            if (queue.occupancy() >= trace.memory_queue_capacity && head) {
                // Full queue stalls the whole access, cache included.
                if (detail::strictly_later(head->exec_end, ready)) {
                    ready = head->exec_end;
                    ready_dtau = head->exec_end_dtau;
                    branch = 1;
                    stall_head = head->index;
                }
            }
        }
        if (inst.dep_index) {
            const std::size_t k = static_cast<std::size_t>(*inst.dep_index) - 1;
            if (detail::strictly_later(r.exec_end[k], ready)) {
                ready = r.exec_end[k];
                ready_dtau = r.exec_end_dtau[k];
                branch = 2;
            }
        }
        const double start = ready + tau;
        const double start_dtau = ready_dtau + 1.0;
        r.exec_start[pos] = start;
        r.exec_start_dtau[pos] = start_dtau;

        double end, end_dtau;
        if (!inst.is_memory()) {
            end = start + inst.exec_cycles * tau;
            end_dtau = start_dtau + inst.exec_cycles;
        } else if (inst.cache_hit) {
            end = start + inst.cache_cycles * tau;
            end_dtau = start_dtau + inst.cache_cycles;
        } else {
            const double enter = start + (inst.cache_cycles + inst.transfer_cycles) * tau;
            end = enter + inst.dram_service_s + tau; // dram service is clock-independent
            end_dtau = start_dtau + inst.cache_cycles + inst.transfer_cycles + 1.0;
            queue.issue({enter, enter + inst.dram_service_s, end, end_dtau, inst.index});
        }
        r.exec_end[pos] = end;
        r.exec_end_dtau[pos] = end_dtau;

        int commit_branch;
        if (!detail::strictly_later(commit_prev, end)) {
            commit_prev = end + tau;
            commit_prev_dtau = end_dtau + 1.0;
            commit_branch = 0;
        } else {
            commit_prev = commit_prev + tau;
            commit_prev_dtau = commit_prev_dtau + 1.0;
            commit_branch = 1;
        }
        r.commit[pos] = commit_prev;
        r.commit_dtau[pos] = commit_prev_dtau;

        detail::fnv_mix(fp, (static_cast<std::uint64_t>(pos) << 16) |
                                static_cast<std::uint64_t>(branch << 8) |
                                static_cast<std::uint64_t>(commit_branch));
        if (branch == 1)
            detail::fnv_mix(fp, static_cast<std::uint64_t>(stall_head));
    }

    r.throughput = static_cast<double>(n) / r.commit.back();
    r.branch_fingerprint = fp;
    return r;
}

/// Number of cache misses resident in the memory queue at the given instant.
/// Internal to compute_timing's full-queue test; exposed for testing.
inline int memory_queue_occupancy(const Trace& trace, double tau, double time) {
    if (trace.instructions.empty())
        return 0;
    const TimingResult r = compute_timing(trace, tau);
    int count = 0;
    for (std::size_t pos = 0; pos < trace.size(); ++pos) {
        const Instruction& inst = trace.instructions[pos];
        if (!inst.is_miss())
            continue;
        const double enter =
            r.exec_start[pos] + (inst.cache_cycles + inst.transfer_cycles) * tau;
        const double exit = enter + inst.dram_service_s;
        if (!detail::strictly_later(enter, time) && detail::strictly_later(exit, time))
            ++count;
    }
    return count;
}

} // namespace ipareg

#endif // IPAREG_TIMING_HPP
