#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hnr {

inline constexpr const char* kVersion = "0.1.0";

/// Bad input data or parameters (CLI maps this to exit code 3).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fixed-point iteration hit max_iter with residual >= tol (exit code 4).
/// Carries the partial (renormalized) score vector and the last L1 residual.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> partial,
                     double residual, int iterations)
        : std::runtime_error(msg),
          partial_(std::move(partial)),
          residual_(residual),
          iterations_(iterations) {}

    const std::vector<double>& partial_scores() const { return partial_; }
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    std::vector<double> partial_;
    double residual_;
    int iterations_;
};

}  // namespace hnr
