#pragma once

#include <stdexcept>
#include <string>

namespace ellspec {

/// Unusable input (bad file, empty data, malformed config). CLI exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative kernel failed to reach its accuracy target. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace ellspec
