#pragma once

#include <stdexcept>
#include <string>

namespace qmg {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejected input: violated precondition or malformed scenario.
class ValidationError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// No sign change over the requested interval.
class BracketingError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A truncated series cannot meet its tail bound.
class TruncationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace qmg
