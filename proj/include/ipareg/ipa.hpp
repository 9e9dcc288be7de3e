#ifndef IPAREG_IPA_HPP
#define IPAREG_IPA_HPP

#include <stdexcept>
#include <string>

#include "ipareg/timing.hpp"

namespace ipareg {

enum class DerivMethod { ExactIpa, RatioApprox };

inline const char* to_string(DerivMethod m) {
    return m == DerivMethod::ExactIpa ? "ipa" : "ratio";
}

/// Derivative of plant output with respect to the control input.  zeta is
/// the known error injected on top of the underlying derivative; zero for
/// native estimates.
struct DerivativeEstimate {
    double value = 0.0;
    DerivMethod method = DerivMethod::ExactIpa;
    double zeta = 0.0;
};

/// d(throughput)/d(frequency) from an already-computed timing result.
/// With y(u) = N / commit_N(1/u) and t = commit_N, dt/dtau propagated by
/// compute_timing, the chain rule gives dy/du = N * dt/dtau * tau^2 / t^2.
inline DerivativeEstimate ipa_from_timing(const TimingResult& timing, double tau) {
    const double t = timing.commit_last();
    const double value = static_cast<double>(timing.size()) *
                         timing.commit_last_dtau() * tau * tau / (t * t);
    return {value, DerivMethod::ExactIpa, 0.0};
}

/// Exact sample-path derivative of throughput with respect to frequency,
/// obtained by following the instruction-flow recursions.
inline DerivativeEstimate ipa_derivative(const Trace& trace, double tau) {
    return ipa_from_timing(compute_timing(trace, tau), tau);
}

/// The crudest usable estimate: output over input.  Coincides with the
/// exact derivative whenever throughput is linear in frequency (no cache
/// misses), and overestimates it otherwise.
inline DerivativeEstimate ratio_approx(double y, double u) {
    if (!(u > 0.0))
        throw std::domain_error("ratio approximation needs positive input, got " +
                                std::to_string(u));
    return {y / u, DerivMethod::RatioApprox, 0.0};
}

} // namespace ipareg

#endif // IPAREG_IPA_HPP
