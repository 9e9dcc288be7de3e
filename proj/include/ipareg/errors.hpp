#ifndef IPAREG_ERRORS_HPP
#define IPAREG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ipareg {

/// A trace violates the instruction-stream invariants (bad indices,
/// missing fields, non-monotone arrival counters, ...).
struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid experiment or policy configuration (bad key, empty grid,
/// inverted interval, scale outside (0,1], unwritable path, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ipareg

#endif // IPAREG_ERRORS_HPP
