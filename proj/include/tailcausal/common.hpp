#pragma once

#include <stdexcept>
#include <string>

namespace tailcausal {

/// Base class for all library errors. The CLI maps subclasses onto exit
/// codes: validation/structural/resource -> 1, estimation/infeasible -> 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Bad arguments, schema violations, out-of-range ids, domain errors.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed graph structure (cycles, duplicate edges).
class StructuralError : public Error {
public:
    using Error::Error;
};

/// An enumeration cap or similar resource guard was exceeded.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// Data too degenerate or too small for the requested estimate.
class EstimationError : public Error {
public:
    using Error::Error;
};

/// Input is inconsistent with every model in the class (e.g. a CTC matrix
/// no weight matrix can produce).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

} // namespace tailcausal
