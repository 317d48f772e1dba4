#pragma once

#include <stdexcept>
#include <string>

namespace ftreg {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: shape mismatch, non-finite value, bad index.
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: bad option value, mismatched domains, missing column.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Data ingestion failure (unparseable cell, missing header, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: singular system, divergence, division guard.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Operation not defined for the given parameterization.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

} // namespace ftreg
