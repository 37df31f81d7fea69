#pragma once

#include <stdexcept>
#include <string>

namespace mfmap {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent input data (bad CSV, shape mismatch, non-finite values).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure (factorization breakdown, non-finite objective or gradient).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or command-line usage.
class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace mfmap
