#pragma once

#include <stdexcept>
#include <string>

namespace apsde {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Assembled covariance has an eigenvalue below the PSD tolerance.
class NonPsdError : public Error {
public:
    using Error::Error;
};

/// Propagator step-halving estimate stays above tolerance after refinement.
class StepTooLargeError : public Error {
public:
    using Error::Error;
};

/// No positive decay-rate certificate; tail truncation would be unjustified.
class NotStableError : public Error {
public:
    using Error::Error;
};

/// Propagator norm grows beyond the allowed bound over the horizon.
class UnstableError : public Error {
public:
    using Error::Error;
};

/// Scan window cannot host the requested shift range.
class WindowTooShortError : public Error {
public:
    using Error::Error;
};

/// Euler-Maruyama path left the admissible magnitude.
class DivergedError : public Error {
public:
    using Error::Error;
};

/// Expression or configuration could not be parsed/validated.
class ParseError : public Error {
public:
    using Error::Error;
};

} // namespace apsde
