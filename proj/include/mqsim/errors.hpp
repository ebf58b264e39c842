#pragma once

#include <stdexcept>
#include <string>

namespace mqsim {

// Invalid argument for a physical formula (out-of-window wavelength, nonpositive width, ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

// Malformed or inconsistent configuration (config file, grid spec, device spec).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A solver failed to converge. Carries the residual reached.
class NumericError : public std::runtime_error {
  public:
    NumericError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual)
    {
    }
    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

// The requested mode is below cutoff. Distinct from NumericError on purpose:
// callers sweeping geometry treat this as data, not failure.
class NotGuidedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A device specification cannot realize its intended function
// (e.g. an analyzer whose design pair is not phase matched).
class DesignError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace mqsim
