#pragma once

#include <stdexcept>
#include <string>

namespace purcell {

// Input/precondition violations (bad values, mismatched lengths, parse errors).
struct precondition_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Requests outside the data range (extrapolation, windows beyond the spectrum).
struct range_error : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Numerical failures (singular systems, non-convergence without a usable iterate).
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hilbert-space truncation would exceed the configured dense-solver budget.
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace purcell
