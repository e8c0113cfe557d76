#pragma once

#include <stdexcept>
#include <string>

namespace baro {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file (bad header, missing file, bad json).
class FormatError : public Error {
public:
    using Error::Error;
};

/// A cell or value could not be parsed as a number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Data violates a domain invariant (duplicates, too few rows, zero variance).
class DataError : public Error {
public:
    using Error::Error;
};

/// Index or time outside the valid range.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Dimension mismatch between arguments.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or generator spec.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure, e.g. a matrix that is not positive definite.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace baro
