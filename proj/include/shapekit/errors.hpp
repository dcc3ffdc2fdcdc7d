#pragma once

#include <stdexcept>
#include <string>

namespace shapekit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Matrix dimensions do not fit the operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Input data unusable (non-finite values, zero vectors, degenerate samples).
class DataError : public Error {
public:
    using Error::Error;
};

/// Iterative solver stopped without meeting its tolerance.
class NumericError : public Error {
public:
    NumericError(const std::string& what, double best, double residual)
        : Error(what), best_(best), residual_(residual) {}

    double best_iterate() const noexcept { return best_; }
    double residual() const noexcept { return residual_; }

private:
    double best_;
    double residual_;
};

/// A matrix that must be positive-definite is (numerically) singular.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double eigenvalue)
        : Error(what), eigenvalue_(eigenvalue) {}

    double eigenvalue() const noexcept { return eigenvalue_; }

private:
    double eigenvalue_;
};

/// Fixed-point iteration exceeded its cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Linear system too ill-conditioned to solve reliably.
class ConditioningError : public Error {
public:
    ConditioningError(const std::string& what, double condition)
        : Error(what), condition_(condition) {}

    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Invalid experiment configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Experiment aborted because too many trials failed (CLI exit code 3).
class ExperimentError : public Error {
public:
    using Error::Error;
};

}  // namespace shapekit
