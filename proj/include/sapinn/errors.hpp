// Error taxonomy shared across the library and the CLI exit-code mapping.
#pragma once

#include <stdexcept>
#include <string>

namespace sapinn {

/// Bad configuration or invalid argument values (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values, divergence, singular systems (CLI exit code 3).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File system / parsing failures (CLI exit code 4).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shape or length mismatch between containers.
struct DimensionError : ConfigError {
    using ConfigError::ConfigError;
};

} // namespace sapinn
