#pragma once

#include <stdexcept>
#include <string>

namespace hysis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented invariant (bad parameters, malformed file, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A simulated state left [0, 1] and the range policy forbids clamping.
class StateRangeError : public Error {
public:
    using Error::Error;
};

/// A ratio such as beta/gamma is undefined for the supplied values.
class UndefinedRatioError : public Error {
public:
    using Error::Error;
};

/// Data does not meet the identifiability conditions and the caller asked for strictness.
class IdentifiabilityError : public Error {
public:
    using Error::Error;
};

} // namespace hysis
