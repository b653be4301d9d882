// Error types thrown by the library. Each names the contract it guards.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace proxops {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error {
    using Error::Error;
};

// Zero-angular-momentum or coincident-geometry states where a frame or
// direction is undefined.
struct SingularGeometry : Error {
    using Error::Error;
};

// Equatorial orbit with out-of-plane forcing: GVE node terms blow up.
struct SingularInclination : Error {
    using Error::Error;
};

// Safety configuration with non-positive worst-case deceleration.
struct InfeasibleSafetyConfig : Error {
    using Error::Error;
};

// A barrier radicand went negative: the underlying constraint is already
// violated. `barrier` is the 1-based index of the failing CBF.
struct ConstraintViolated : Error {
    ConstraintViolated(int barrier_index, const std::string& msg)
        : Error(msg), barrier(barrier_index) {}
    int barrier;
};

// QP constraint set has no feasible point; carries the active set found at
// detection time so the caller can decide a fallback.
struct QpInfeasible : Error {
    QpInfeasible(std::vector<int> active, const std::string& msg)
        : Error(msg), active_set(std::move(active)) {}
    std::vector<int> active_set;
};

struct NumericalFailure : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

// Delayed measurement older than the filter's history span.
struct StaleMeasurement : Error {
    using Error::Error;
};

struct DegenerateCovariance : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace proxops
