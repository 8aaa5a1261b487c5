#pragma once

#include <stdexcept>
#include <string>

namespace bundlenat {

// Exception taxonomy. The CLI maps these onto exit codes:
// usage -> 1, data/format/config -> 2, numerical failure -> 3.

// Tensor shape disagreement (names both shapes in the message).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad argument to an operation (empty input, k too large, non-square cost...).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid or inconsistent configuration (infeasible sizes, dim mismatch).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed input text; message carries file and line where known.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Container/version mismatch in a binary or versioned file.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Id outside the declared vocabulary.
struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent dataset content (e.g. target item missing from candidates).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API used out of order (backward without forward, reused tape...).
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A caller-supplied precondition was violated (non-deterministic closure,
// epsilon outside the supported window).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure: NaN loss, divergence.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace bundlenat
