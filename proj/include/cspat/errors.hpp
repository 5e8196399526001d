#pragma once

#include <stdexcept>
#include <string>

namespace cspat {

// Thrown when array extents disagree with the geometry they claim to describe.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative solver failed to reach its tolerance within the iteration budget.
struct ConvergenceError : std::runtime_error {
    double residual;
    ConvergenceError(const std::string& msg, double res)
        : std::runtime_error(msg), residual(res) {}
};

// Objective blew up; carries the step size that caused it.
struct DivergenceError : std::runtime_error {
    double mu;
    DivergenceError(const std::string& msg, double step)
        : std::runtime_error(msg), mu(step) {}
};

// Combinatorial work would exceed the configured budget.
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// Step size incompatible with the operator norm estimate.
struct StepSizeError : std::runtime_error {
    double norm_estimate;
    StepSizeError(const std::string& msg, double est)
        : std::runtime_error(msg), norm_estimate(est) {}
};

// Malformed configuration; carries the JSON path of the offending field.
struct ConfigError : std::runtime_error {
    std::string field_path;
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error(path + ": " + msg), field_path(path) {}
};

}  // namespace cspat
