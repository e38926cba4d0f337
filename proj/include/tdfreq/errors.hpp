#pragma once

#include <stdexcept>
#include <string>

namespace tdfreq {

// Validation problems (bad dimensions, infeasible plans, bad config) are
// reported as std::invalid_argument or a subclass of it. Failures of the
// numerics themselves derive from NumericalError.

class InsufficientDataError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when zI - A (or zE - A) is numerically singular at the requested z.
class SingularResolventError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace tdfreq
