#pragma once

#include <stdexcept>
#include <string>

#include "vsum/real.hpp"

VSUM_NS_BEGIN

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape/conformance violations in tensor arithmetic.
struct DimensionError : Error {
    using Error::Error;
};

// Operations invoked in an invalid order (e.g. backward twice on one tape).
struct StateError : Error {
    using Error::Error;
};

// Malformed on-disk payloads: bad magic, version, truncation.
struct FormatError : Error {
    using Error::Error;
};

// Semantically invalid corpus data (dangling ids, length mismatches, ...).
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem-level failures, always carrying the offending path.
struct IoError : Error {
    using Error::Error;
};

// Invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Numeric failures: divergence, gradient-check threshold breaches.
struct NumericError : Error {
    using Error::Error;
};

VSUM_NS_END
