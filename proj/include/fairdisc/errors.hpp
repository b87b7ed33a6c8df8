#pragma once

#include <stdexcept>
#include <string>

namespace fairdisc {

// Error taxonomy mirrored by the C API status codes and the CLI exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition (shape mismatch, bad axis, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A configuration file or flag failed validation.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data (CSV parse errors, schema violations).
class DataError : public Error {
public:
    using Error::Error;
};

// Non-finite values or a failed numeric check during computation.
class NumericError : public Error {
public:
    using Error::Error;
};

// Filesystem and serialization failures.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace fairdisc
