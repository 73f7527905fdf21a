#pragma once

#include <stdexcept>
#include <string>

namespace vlg {

// Invalid configuration or shape mismatch detected at construction/call time.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// API misuse, e.g. stepping a finished episode.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Non-finite values reached an optimizer or loss.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Scene generation could not satisfy its constraints.
class PlacementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vlg
