#ifndef IPAREG_CONTROLLER_HPP
#define IPAREG_CONTROLLER_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ipareg/errors.hpp"

namespace ipareg {

/// Finite set of admissible actuator values, strictly increasing.
struct FrequencyGrid {
    std::vector<double> points;

    void validate() const {
        if (points.empty())
            throw ConfigError("frequency grid must not be empty");
        for (std::size_t i = 1; i < points.size(); ++i)
            if (!(points[i] > points[i - 1]))
                throw ConfigError("frequency grid must be strictly increasing");
        if (points.front() <= 0.0)
            throw ConfigError("frequency grid values must be positive");
    }

    FrequencyGrid scaled(double factor) const {
        FrequencyGrid g = *this;
        for (double& p : g.points) p *= factor;
        return g;
    }

    /// The 16 admissible frequencies of the studied hardware, in GHz.
    static FrequencyGrid haswell16() {
        return {{0.8, 1.0, 1.1, 1.3, 1.5, 1.7, 1.8, 2.0,
                 2.2, 2.4, 2.5, 2.7, 2.9, 3.1, 3.2, 3.4}};
    }
};

/// Nearest grid point; the lower point on ties.  Idempotent.
inline double quantize(double u, const FrequencyGrid& grid) {
    const auto& p = grid.points;
    auto it = std::lower_bound(p.begin(), p.end(), u);
    if (it == p.begin()) return p.front();
    if (it == p.end()) return p.back();
    const double hi = *it, lo = *(it - 1);
    return (u - lo) <= (hi - u) ? lo : hi;
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Clamp onto [lo, hi]; identity inside.
inline double project(double u, Interval interval) {
    if (interval.lo > interval.hi)
        throw ConfigError("projection interval has lo > hi");
    return std::clamp(u, interval.lo, interval.hi);
}

/// Optional modifications of the plain adaptive-gain update, applied in a
/// fixed order: scale the step, project onto the interval, quantize to the
/// grid.
struct ControllerPolicy {
    double scale = 1.0;                    // in (0, 1]
    std::optional<Interval> interval;
    std::optional<FrequencyGrid> grid;
    double derivative_floor = 1e-12;       // below this, hold instead of inverting

    void validate() const {
        if (!(scale > 0.0) || scale > 1.0)
            throw ConfigError("gain scale must be in (0, 1]");
        if (interval && interval->lo > interval->hi)
            throw ConfigError("projection interval has lo > hi");
        if (grid) grid->validate();
        if (derivative_floor < 0.0)
            throw ConfigError("derivative floor must be nonnegative");
    }
};

struct ControllerState {
    double u = 0.0;       // actuator value applied during the current cycle
    double e_prev = 0.0;  // last measured error
    double gain = 0.0;    // last computed gain
    long n = 0;           // completed cycles
    ControllerPolicy policy;
};

struct StepFlags {
    bool rejected = false;   // non-finite or unmeasured output, state held
    bool gain_held = false;  // derivative below floor, actuator held
};

struct StepResult {
    ControllerState state;
    StepFlags flags;
};

/// One control-cycle update: from the cycle's measured output and derivative
/// estimate, set the next actuator value
///
///   u' = quantize(project(u + scale * e / derivative))
///
/// where e = setpoint - y and the reciprocal of the derivative estimate is
/// the integrator gain.  A non-finite or unmeasured output rejects the cycle
/// outright; a derivative below the policy floor holds the actuator instead
/// of producing an unbounded gain.  Response is any type with fields y,
/// valid, and derivative.value (see PlantResponse in plants.hpp).
template <typename Response>
inline StepResult step(const ControllerState& state, const Response& response,
                       double setpoint) {
    state.policy.validate();
    StepResult out{state, {}};
    out.state.n = state.n + 1;

    const double y = response.y;
    if (!response.valid || !std::isfinite(y)) {
        out.flags.rejected = true;
        return out;
    }

    const double e = setpoint - y;
    out.state.e_prev = e;

    const double deriv = response.derivative.value;
    if (!std::isfinite(deriv) || std::abs(deriv) < state.policy.derivative_floor) {
        out.flags.gain_held = true;
        return out;
    }

    const double gain = 1.0 / deriv;
    out.state.gain = gain;

    double next = state.u + state.policy.scale * gain * e;
    if (state.policy.interval)
        next = project(next, *state.policy.interval);
    if (state.policy.grid)
        next = quantize(next, *state.policy.grid);
    out.state.u = next;
    return out;
}

} // namespace ipareg

#endif // IPAREG_CONTROLLER_HPP
