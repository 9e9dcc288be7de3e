#ifndef IPAREG_TRACE_HPP
#define IPAREG_TRACE_HPP

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ipareg/errors.hpp"

namespace ipareg {

enum class InstrKind { Computational, Memory };

/// One element of an instruction trace. Field presence depends on kind:
/// exec_cycles for computational instructions, the cache/transfer fields
/// for memory instructions, dram_service_s for cache misses only.
struct Instruction {
    int index = 0;                   // 1-based program order
    InstrKind kind = InstrKind::Computational;
    std::int64_t arrival_counter = 0; // clock count at arrival, 0 for the first instruction
    int exec_cycles = 0;             // cycles to execute (computational)
    int cache_cycles = 0;            // cycles per cache attempt (memory)
    int transfer_cycles = 0;         // cycles to move to the memory queue (memory)
    bool cache_hit = true;           // outcome of the cache attempt (memory)
    double dram_service_s = 0.0;     // sojourn at the memory queue, clock-independent (miss)
    std::optional<int> dep_index;    // producer of the last-arriving operand, < index

    bool is_memory() const { return kind == InstrKind::Memory; }
    bool is_miss() const { return is_memory() && !cache_hit; }
};

struct Trace {
    std::vector<Instruction> instructions;
    int memory_queue_capacity = 1;

    std::size_t size() const { return instructions.size(); }
};

/// Throws TraceError unless the trace satisfies all structural invariants.
inline void validate_trace(const Trace& trace) {
    if (trace.instructions.empty())
        throw TraceError("trace is empty");
    if (trace.memory_queue_capacity < 1)
        throw TraceError("memory queue capacity must be positive");

    std::int64_t prev_counter = 0;
    for (std::size_t pos = 0; pos < trace.instructions.size(); ++pos) {
        const Instruction& inst = trace.instructions[pos];
        const std::string where = "instruction " + std::to_string(pos + 1) + ": ";
        if (inst.index != static_cast<int>(pos) + 1)
            throw TraceError(where + "indices must be contiguous from 1");
        if (inst.arrival_counter < 0)
            throw TraceError(where + "arrival counter must be nonnegative");
        if (pos == 0 && inst.arrival_counter != 0)
            throw TraceError(where + "first arrival counter must be 0");
        if (pos > 0 && inst.arrival_counter < prev_counter)
            throw TraceError(where + "arrival counters must be nondecreasing");
        prev_counter = inst.arrival_counter;

        if (inst.dep_index) {
            if (*inst.dep_index < 1 || *inst.dep_index >= inst.index)
                throw TraceError(where + "dependency index must be in [1, index)");
        }
        if (inst.kind == InstrKind::Computational) {
            if (inst.exec_cycles < 1)
                throw TraceError(where + "computational instruction needs positive exec cycles");
        } else {
            if (inst.cache_cycles < 1)
                throw TraceError(where + "memory instruction needs positive cache cycles");
            if (inst.transfer_cycles < 0)
                throw TraceError(where + "transfer cycles must be nonnegative");
            if (!inst.cache_hit && inst.dram_service_s < 0.0)
                throw TraceError(where + "dram service time must be nonnegative");
        }
    }
}

/// Extracts instructions [begin, begin+count) as a standalone trace:
/// arrival counters re-based to start at 0, dependencies that point
/// before the slice dropped (their operands count as available).
inline Trace slice_rebased(const Trace& trace, std::size_t begin, std::size_t count) {
    Trace out;
    out.memory_queue_capacity = trace.memory_queue_capacity;
    out.instructions.reserve(count);
    const std::int64_t base = trace.instructions.at(begin).arrival_counter;
    for (std::size_t j = 0; j < count; ++j) {
        Instruction inst = trace.instructions.at(begin + j);
        inst.index = static_cast<int>(j) + 1;
        inst.arrival_counter -= base;
        if (inst.dep_index && *inst.dep_index > static_cast<int>(begin))
            inst.dep_index = *inst.dep_index - static_cast<int>(begin);
        else
            inst.dep_index.reset();
        out.instructions.push_back(inst);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trace file format: one-line preamble, one header line, one instruction per
// line.  Empty fields mean "not applicable for this kind".
//
//   memory_queue_capacity=8
//   index,kind,arrival_counter,dep_index,exec_cycles,cache_cycles,transfer_cycles,cache_hit,dram_service_s
//   1,C,0,,2,,,,
//   2,M,3,1,,2,1,miss,6e-08
// ---------------------------------------------------------------------------

inline const char* trace_header() {
    return "index,kind,arrival_counter,dep_index,exec_cycles,cache_cycles,"
           "transfer_cycles,cache_hit,dram_service_s";
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

inline void write_trace(const Trace& trace, std::ostream& os) {
    os << "memory_queue_capacity=" << trace.memory_queue_capacity << "\n";
    os << trace_header() << "\n";
    for (const Instruction& inst : trace.instructions) {
        os << inst.index << ',' << (inst.is_memory() ? 'M' : 'C') << ','
           << inst.arrival_counter << ',';
        if (inst.dep_index) os << *inst.dep_index;
        os << ',';
        if (!inst.is_memory()) os << inst.exec_cycles;
        os << ',';
        if (inst.is_memory()) os << inst.cache_cycles;
        os << ',';
        if (inst.is_memory()) os << inst.transfer_cycles;
        os << ',';
        if (inst.is_memory()) os << (inst.cache_hit ? "hit" : "miss");
        os << ',';
        if (inst.is_miss()) os << detail::format_double(inst.dram_service_s);
        os << "\n";
    }
}

inline void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream os(path);
    if (!os)
        throw ConfigError("cannot open trace file for writing: " + path);
    write_trace(trace, os);
    if (!os)
        throw ConfigError("error while writing trace file: " + path);
}

inline Trace read_trace(std::istream& is, const std::string& origin = "<stream>") {
    auto fail = [&](int line, const std::string& msg) -> TraceError {
        return TraceError(origin + ":" + std::to_string(line) + ": " + msg);
    };

    Trace trace;
    std::string line;
    if (!std::getline(is, line))
        throw fail(1, "missing preamble line");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    const std::string key = "memory_queue_capacity=";
    if (line.rfind(key, 0) != 0)
        throw fail(1, "preamble must be memory_queue_capacity=<n>");
    try {
        trace.memory_queue_capacity = std::stoi(line.substr(key.size()));
    } catch (const std::exception&) {
        throw fail(1, "bad capacity value");
    }

    if (!std::getline(is, line))
        throw fail(2, "missing header line");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != trace_header())
        throw fail(2, "unexpected header line");

    int lineno = 2;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv(line);
        if (fields.size() != 9)
            throw fail(lineno, "expected 9 fields");
        Instruction inst;
        try {
            inst.index = std::stoi(fields[0]);
            if (fields[1] == "C")
                inst.kind = InstrKind::Computational;
            else if (fields[1] == "M")
                inst.kind = InstrKind::Memory;
            else
                throw TraceError("kind must be C or M");
            inst.arrival_counter = std::stoll(fields[2]);
            if (!fields[3].empty()) inst.dep_index = std::stoi(fields[3]);
            if (!fields[4].empty()) inst.exec_cycles = std::stoi(fields[4]);
            if (!fields[5].empty()) inst.cache_cycles = std::stoi(fields[5]);
            if (!fields[6].empty()) inst.transfer_cycles = std::stoi(fields[6]);
            if (inst.is_memory()) {
                if (fields[7] == "hit")
                    inst.cache_hit = true;
                else if (fields[7] == "miss")
                    inst.cache_hit = false;
                else
                    throw TraceError("cache_hit must be hit or miss");
            }
            if (!fields[8].empty()) inst.dram_service_s = std::stod(fields[8]);
        } catch (const TraceError& e) {
            throw fail(lineno, e.what());
        } catch (const std::exception&) {
            throw fail(lineno, "malformed numeric field");
        }
        trace.instructions.push_back(inst);
    }
    validate_trace(trace);
    return trace;
}

inline Trace read_trace_file(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError("cannot open trace file: " + path);
    return read_trace(is, path);
}

} // namespace ipareg

#endif // IPAREG_TRACE_HPP
