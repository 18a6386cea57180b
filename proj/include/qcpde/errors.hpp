#pragma once

#include <stdexcept>
#include <string>

namespace qcpde {

/// Invalid grid, field or solver parameters supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A field was passed to an operator that needs a declared compact support
/// inside the guard band |z| <= L/2.
class SupportError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// |mu| reached 1 (or an elliptic matrix field lost ellipticity).
class DegeneracyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside a solver: blow-up, lost orientation, Newton stall.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The continuation iterate left the a priori ball.
class BlowupError : public SolverError {
public:
    using SolverError::SolverError;
};

/// A point or a field lies outside the region where a map is defined.
class OutOfRangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

}  // namespace qcpde
