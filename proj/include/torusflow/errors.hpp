#pragma once

#include <stdexcept>
#include <string>

namespace torusflow {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input: malformed metric, config or precondition violation. CLI exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Numerical failure of an otherwise valid computation. CLI exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

class StepFailure : public NumericalError {
public:
    StepFailure(const std::string& what, double time)
        : NumericalError(what + " at t=" + std::to_string(time)), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

class HorizonTooShort : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class NotEscaping : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class AxesNotDisjoint : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class PrimitiveRequired : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DegenerateSpacing : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NumericalBlowup : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class EndpointCollision : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotConverged : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace torusflow
