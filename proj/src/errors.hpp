#pragma once

#include <stdexcept>
#include <string>

namespace bayesperf {

// Base class for everything thrown by this library. The what() string is
// intended to be shown to users unchanged.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files: bad JSON/CSV syntax.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error("parse error: " + msg) {}
};

// Structurally valid input that violates a schema or an invariant
// (unknown fields, missing keys, out-of-range counters, ...).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error("schema error: " + msg) {}
};

class UnknownEventError : public Error {
public:
    explicit UnknownEventError(const std::string& event)
        : Error("unknown event: " + event), event_(event) {}
    const std::string& event() const { return event_; }

private:
    std::string event_;
};

class DuplicateFactorIdError : public Error {
public:
    explicit DuplicateFactorIdError(const std::string& id)
        : Error("duplicate factor id: " + id) {}
};

class InvalidScheduleError : public Error {
public:
    explicit InvalidScheduleError(const std::string& msg)
        : Error("invalid schedule: " + msg) {}
};

class NoPathError : public Error {
public:
    NoPathError(const std::string& from, const std::string& to)
        : Error("no dependency path from " + from + " to " + to) {}
};

class DivisionByZeroError : public Error {
public:
    explicit DivisionByZeroError(const std::string& where)
        : Error("division by zero in " + where) {}
};

// t_e <= 0 or t_r <= 0 in a scaling request.
class DegenerateTimingError : public Error {
public:
    explicit DegenerateTimingError(const std::string& msg)
        : Error("degenerate timing: " + msg) {}
};

class InsufficientSamplesError : public Error {
public:
    explicit InsufficientSamplesError(const std::string& msg)
        : Error("insufficient samples: " + msg) {}
};

class NoObservationsError : public Error {
public:
    explicit NoObservationsError(const std::string& msg)
        : Error("no observations: " + msg) {}
};

class UnderdeterminedWorkloadError : public Error {
public:
    explicit UnderdeterminedWorkloadError(const std::string& msg)
        : Error("underdetermined workload: " + msg) {}
};

class EmptySeriesError : public Error {
public:
    explicit EmptySeriesError(const std::string& msg) : Error("empty series: " + msg) {}
};

// Reference series is identically zero, so relative error is undefined.
class ZeroReferenceError : public Error {
public:
    explicit ZeroReferenceError(const std::string& msg) : Error("zero reference: " + msg) {}
};

// Numerical failure at runtime (non-finite results, improper posteriors, ...).
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric error: " + msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error("io error: " + msg) {}
};

}  // namespace bayesperf
