#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace divret {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, invariant violations, unknown ids.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Caller broke an operation's precondition (empty text, oversize oracle, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Transport or protocol failure talking to an external service.
class RemoteError : public Error {
public:
    using Error::Error;
};

/// Non-fatal diagnostics collected along a run, in emission order.
using Warnings = std::vector<std::string>;

}  // namespace divret
