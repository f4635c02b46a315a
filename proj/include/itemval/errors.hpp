#pragma once

#include <stdexcept>
#include <string>

namespace itemval {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed files, domain violations, referential errors,
// inconsistent configuration. The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

// Failures that occur after inputs validated: I/O, remote services,
// infeasible generation. The CLI maps these to exit code 3.
class RuntimeFailure : public Error {
public:
    using Error::Error;
};

// Transport or protocol failure talking to an embedding/scoring endpoint.
class RemoteError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

// Local file read/write failure.
class IoError : public RuntimeFailure {
public:
    using RuntimeFailure::RuntimeFailure;
};

} // namespace itemval
