#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fedbatch {

/// Base of every error raised by the library. `exit_code()` is what the CLI returns.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 5; }
};

class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class TimeoutError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

class DomainError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

/// A feedback law produced a flow outside [0, Q_max].
class ControlError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// The adjoint vector collapsed to zero (the maximizing controls are undefined).
class DegeneracyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Step size underflow. Carries the last accepted time and state.
class StiffnessError : public NumericalError {
public:
    StiffnessError(const std::string& what, double t, std::vector<double> state)
        : NumericalError(what), t_(t), state_(std::move(state)) {}
    double time() const noexcept { return t_; }
    const std::vector<double>& state() const noexcept { return state_; }

private:
    double t_;
    std::vector<double> state_;
};

}  // namespace fedbatch
