#pragma once

#include <stdexcept>
#include <string>

namespace holderlab {

/// Malformed arguments: dimension mismatch, empty clouds, balls leaving the domain.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The equation left its structural class (A not positive definite, lambda <= 0).
class StructureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Newton iteration stopped without reaching the residual tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double final_residual, int iterations)
        : std::runtime_error(what), final_residual_(final_residual), iterations_(iterations) {}

    double final_residual() const noexcept { return final_residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double final_residual_;
    int iterations_;
};

}  // namespace holderlab
