#pragma once

#include <stdexcept>
#include <string>

namespace proxflow {

// A computation left the valid numeric regime (kernel underflow, zero mass,
// singular drift, ...). Maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

enum class ConfigCode {
    ParseError = 1,
    UnknownScenario,
    UnknownKey,
    BadValue,
    NonPositiveParameter,
    BadCardinality,
    IoError,
};

// Invalid run configuration. Maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    ConfigCode code;
    ConfigError(ConfigCode c, const std::string& what) : std::runtime_error(what), code(c) {}
};

}  // namespace proxflow
