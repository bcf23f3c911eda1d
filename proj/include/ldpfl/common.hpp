#pragma once

#include <stdexcept>
#include <string>

namespace ldpfl {

// Two parameter vectors with incompatible layer layouts were combined.
struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A NaN/Inf reached an operation that requires finite inputs.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration value or inconsistent combination of settings.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// An operation was called in a way its contract forbids (empty list, missing
// eavesdrop view, ...).
struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A dataset file could not be parsed; the message carries the byte offset.
struct ingest_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ldpfl
