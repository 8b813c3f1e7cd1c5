#pragma once

#include <stdexcept>
#include <string>

namespace plriv {

/// Bad user-facing configuration (flags, lambda <= 0, unknown columns).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Unusable input data (too few rows, empty files, constant columns).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure during estimation (collinear X, singular weighted system).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace plriv
