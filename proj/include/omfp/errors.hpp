#pragma once

#include <stdexcept>
#include <string>

namespace omfp {

/// Bad or inconsistent run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// No stable, damped equilibrium: the requested stationary problem has no
/// thermal-like solution (CLI exit code 3).
struct InstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Total damping is non-positive at the evaluation point, so no effective
/// temperature can be assigned.
struct NegativeDampingError : InstabilityError {
    using InstabilityError::InstabilityError;
};

/// A linear or nonlinear solve did not reach its residual contract
/// (CLI exit code 4).
struct SolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation called outside its declared domain of validity.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Estimator was asked to run on fewer samples than it needs.
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A trajectory left the physically sensible region.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace omfp
