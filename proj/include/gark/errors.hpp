#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gark {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A tableau that cannot be used for the requested operation (e.g. a zero
/// weight when building the adjoint coefficients).
class UnsupportedTableau : public Error {
public:
    UnsupportedTableau(const std::string& what, int partition, int stage)
        : Error(what), partition_(partition), stage_(stage) {}

    int partition() const noexcept { return partition_; }
    int stage() const noexcept { return stage_; }

private:
    int partition_;
    int stage_;
};

class GridError : public Error {
public:
    using Error::Error;
};

class TimeGridMismatch : public Error {
public:
    using Error::Error;
};

/// Newton failure while solving an implicit stage.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, int iterations, double residual_norm,
                std::ptrdiff_t step_index = -1)
        : Error(what),
          iterations_(iterations),
          residual_norm_(residual_norm),
          step_index_(step_index) {}

    int iterations() const noexcept { return iterations_; }
    double residual_norm() const noexcept { return residual_norm_; }
    std::ptrdiff_t step_index() const noexcept { return step_index_; }

private:
    int iterations_;
    double residual_norm_;
    std::ptrdiff_t step_index_;
};

class AdjointStepError : public Error {
public:
    using Error::Error;
};

class LinearSolveError : public Error {
public:
    using Error::Error;
};

}  // namespace gark
