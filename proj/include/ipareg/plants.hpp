#ifndef IPAREG_PLANTS_HPP
#define IPAREG_PLANTS_HPP

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipareg/ipa.hpp"
#include "ipareg/rng.hpp"
#include "ipareg/timing.hpp"
#include "ipareg/workload.hpp"

namespace ipareg {

/// What one control cycle measured.  duration_s is the plant time the cycle
/// covered; valid=false marks a cycle with nothing to measure (the
/// controller then skips its update).
struct PlantResponse {
    double y = 0.0;
    DerivativeEstimate derivative{};
    long cycle_index = 0;
    double duration_s = 0.0;
    bool valid = true;
};

/// A plant maps the held control input to one cycle's output and a
/// derivative estimate, measured on the same cycle.
class Plant {
public:
    virtual ~Plant() = default;

    /// cycle_length is an instruction count or a time span, depending on
    /// the plant.
    virtual PlantResponse run_cycle(double u, double cycle_length) = 0;
};

// ---------------------------------------------------------------------------
// Analytic plant: a known response curve plus injected output and slope
// errors, for convergence experiments where the truth is available.
// ---------------------------------------------------------------------------

enum class JKind { Linear, Quadratic, Sqrt, Reciprocal };

inline const char* to_string(JKind k) {
    switch (k) {
        case JKind::Linear: return "linear";
        case JKind::Quadratic: return "quadratic";
        case JKind::Sqrt: return "sqrt";
        default: return "reciprocal";
    }
}

/// Bounds for the injected errors.  psi perturbs the output within
/// [-psi_bound, psi_bound]; phi perturbs the reported slope, either
/// additively or proportionally to the true slope.
struct NoiseSpec {
    enum class PhiMode { Additive, RelativeToSlope };
    double psi_bound = 0.0;
    PhiMode phi_mode = PhiMode::Additive;
    double phi_bound = 0.0;
    std::uint64_t seed = 0;
};

class AnalyticPlant : public Plant {
public:
    AnalyticPlant(JKind kind, double coeff, NoiseSpec noise = {})
        : kind_(kind), coeff_(coeff), noise_(noise), rng_(noise.seed) {}

    double eval(double u) const {
        switch (kind_) {
            case JKind::Linear: return coeff_ * u;
            case JKind::Quadratic: return coeff_ * u * u;
            case JKind::Sqrt: return coeff_ * std::sqrt(u);
            default: return coeff_ / u;
        }
    }

    double slope(double u) const {
        switch (kind_) {
            case JKind::Linear: return coeff_;
            case JKind::Quadratic: return 2.0 * coeff_ * u;
            case JKind::Sqrt: return 0.5 * coeff_ / std::sqrt(u);
            default: return -coeff_ / (u * u);
        }
    }

    PlantResponse run_cycle(double u, double) override {
        if ((kind_ == JKind::Sqrt || kind_ == JKind::Reciprocal) && !(u > 0.0))
            throw std::domain_error("analytic plant input must be positive");
        const double psi =
            noise_.psi_bound > 0.0 ? rng_.uniform(-noise_.psi_bound, noise_.psi_bound) : 0.0;
        double phi = 0.0;
        if (noise_.phi_bound > 0.0) {
            const double draw = rng_.uniform(-noise_.phi_bound, noise_.phi_bound);
            phi = noise_.phi_mode == NoiseSpec::PhiMode::Additive ? draw : draw * slope(u);
        }
        PlantResponse resp;
        resp.y = eval(u) + psi;
        resp.derivative = {slope(u) + phi, DerivMethod::ExactIpa, phi};
        resp.cycle_index = n_++;
        resp.duration_s = 1.0;
        return resp;
    }

private:
    JKind kind_;
    double coeff_;
    NoiseSpec noise_;
    Rand rng_;
    long n_ = 0;
};

// ---------------------------------------------------------------------------
// Out-of-order core plant: each control cycle simulates a fixed number of
// instructions at clock period 1/u and reports throughput.
// ---------------------------------------------------------------------------

class OooPlant : public Plant {
public:
    /// Generates the instruction stream on the fly from a profile.
    OooPlant(const WorkloadProfile& profile, DerivMethod method)
        : stream_(WorkloadStream(profile)), method_(method) {}

    /// Consumes a pre-generated trace, cycling back to the start when
    /// exhausted.
    OooPlant(Trace trace, DerivMethod method)
        : trace_(std::move(trace)), method_(method) {
        validate_trace(*trace_);
    }

    PlantResponse run_cycle(double u, double cycle_length) override {
        if (!(u > 0.0) || !std::isfinite(u))
            throw std::domain_error("core frequency must be positive");
        const long count = std::lround(cycle_length);
        if (count <= 0)
            throw std::domain_error("instructions per cycle must be positive");

        const Trace segment = next_segment(count);
        const double tau = 1.0 / u;
        const TimingResult timing = compute_timing(segment, tau);
        const double exact = ipa_from_timing(timing, tau).value;

        PlantResponse resp;
        resp.y = timing.throughput;
        if (method_ == DerivMethod::RatioApprox) {
            resp.derivative = ratio_approx(resp.y, u);
            resp.derivative.zeta = resp.derivative.value - exact;
        } else {
            resp.derivative = {exact, DerivMethod::ExactIpa, 0.0};
        }
        resp.cycle_index = n_++;
        resp.duration_s = timing.commit_last();
        return resp;
    }

private:
    Trace next_segment(long count) {
        if (stream_)
            return stream_->next_trace(count);
        const std::size_t n = trace_->size();
        const std::size_t want = static_cast<std::size_t>(count);
        Trace segment;
        segment.memory_queue_capacity = trace_->memory_queue_capacity;
        segment.instructions.reserve(want);
        while (segment.size() < want) {
            if (cursor_ >= n) cursor_ = 0;
            const std::size_t take = std::min(want - segment.size(), n - cursor_);
            const Trace part = slice_rebased(*trace_, cursor_, take);
            const int index_base = static_cast<int>(segment.size());
            const std::int64_t arrival_base =
                segment.instructions.empty() ? 0 : segment.instructions.back().arrival_counter;
            for (Instruction inst : part.instructions) {
                inst.index += index_base;
                if (inst.dep_index) inst.dep_index = *inst.dep_index + index_base;
                inst.arrival_counter += arrival_base;
                segment.instructions.push_back(inst);
            }
            cursor_ += take;
        }
        return segment;
    }

    std::optional<WorkloadStream> stream_;
    std::optional<Trace> trace_;
    std::size_t cursor_ = 0;
    DerivMethod method_;
    long n_ = 0;
};

// ---------------------------------------------------------------------------
// M/D/1 plant: Poisson arrivals into a FIFO queue whose deterministic
// service time is the control input; the output is the mean sojourn time of
// the cycle's arrivals.
// ---------------------------------------------------------------------------

/// Sojourn times for a FIFO queue with deterministic service time `theta`.
/// prev_depart carries the queue state across cycle boundaries.
inline std::vector<double> md1_sojourns(const std::vector<double>& arrivals, double theta,
                                        double prev_depart = -1.0) {
    std::vector<double> sojourn;
    sojourn.reserve(arrivals.size());
    double depart = prev_depart;
    for (double a : arrivals) {
        depart = (a >= depart ? a : depart) + theta;
        sojourn.push_back(depart - a);
    }
    return sojourn;
}

/// Rank of each customer within its busy period (1 for a customer that
/// starts service immediately).  The rank is the sample-path derivative of
/// that customer's sojourn time with respect to the service time.
inline std::vector<long> md1_busy_ranks(const std::vector<double>& arrivals, double theta,
                                        double prev_depart = -1.0, long prev_rank = 0) {
    std::vector<long> ranks;
    ranks.reserve(arrivals.size());
    double depart = prev_depart;
    long rank = prev_rank;
    for (double a : arrivals) {
        rank = a >= depart ? 1 : rank + 1;
        depart = (a >= depart ? a : depart) + theta;
        ranks.push_back(rank);
    }
    return ranks;
}

/// Mean busy-period rank: the sample-path derivative of the cycle's mean
/// sojourn time with respect to the deterministic service time.  Undefined
/// without customers.
inline std::optional<double> md1_ipa_sojourn_derivative(const std::vector<long>& ranks) {
    if (ranks.empty())
        return std::nullopt;
    double acc = 0.0;
    for (long r : ranks) acc += static_cast<double>(r);
    return acc / static_cast<double>(ranks.size());
}

class Md1Plant : public Plant {
public:
    Md1Plant(double arrival_rate, std::uint64_t seed)
        : arrival_rate_(arrival_rate), rng_(seed) {
        if (!(arrival_rate > 0.0))
            throw ConfigError("arrival rate must be positive");
        next_arrival_ = rng_.exponential(arrival_rate_);
    }

    PlantResponse run_cycle(double theta, double cycle_seconds) override {
        if (!(theta > 0.0) || !std::isfinite(theta))
            throw std::domain_error("service time must be positive");
        if (!(cycle_seconds > 0.0))
            throw std::domain_error("cycle duration must be positive");

        std::vector<double> arrivals;
        double t = next_arrival_;
        const double horizon = clock_ + cycle_seconds;
        while (t < horizon) {
            arrivals.push_back(t);
            t += rng_.exponential(arrival_rate_);
        }
        next_arrival_ = t;
        clock_ = horizon;

        PlantResponse resp;
        resp.cycle_index = n_++;
        resp.duration_s = cycle_seconds;
        if (arrivals.empty()) {
            // Nothing arrived: report the previous derivative, flag the
            // cycle so the controller skips its update.
            resp.y = 0.0;
            resp.derivative = {last_derivative_, DerivMethod::ExactIpa, 0.0};
            resp.valid = false;
            return resp;
        }

        const auto sojourns = md1_sojourns(arrivals, theta, prev_depart_);
        const auto ranks = md1_busy_ranks(arrivals, theta, prev_depart_, prev_rank_);
        prev_depart_ = arrivals.back() + sojourns.back();
        prev_rank_ = ranks.back();

        double mean = 0.0;
        for (double s : sojourns) mean += s;
        mean /= static_cast<double>(sojourns.size());

        resp.y = mean;
        resp.derivative = {*md1_ipa_sojourn_derivative(ranks), DerivMethod::ExactIpa, 0.0};
        last_derivative_ = resp.derivative.value;
        return resp;
    }

private:
    double arrival_rate_;
    Rand rng_;
    double clock_ = 0.0;
    double next_arrival_ = 0.0;
    double prev_depart_ = -1.0;
    long prev_rank_ = 0;
    double last_derivative_ = 1.0;
    long n_ = 0;
};

} // namespace ipareg

#endif // IPAREG_PLANTS_HPP
