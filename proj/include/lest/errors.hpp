#pragma once

#include <stdexcept>
#include <string>

namespace lest {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File exists but its size or framing is not a valid record stream.
struct MalformedFileError : Error {
    using Error::Error;
};

/// File decodes but carries invalid payload (NaN/Inf coordinates, ...).
struct DataError : Error {
    using Error::Error;
};

/// A documented precondition of an operation was violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

/// Numerical failure inside an otherwise valid computation (zero denominator, ...).
struct NumericalError : Error {
    using Error::Error;
};

/// A trusted quadratic oracle was handed a similarity that is not strictly positive.
struct OraclePreconditionError : Error {
    using Error::Error;
};

/// Config file could not be parsed or validated.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace lest
