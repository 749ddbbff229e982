#pragma once

#include <stdexcept>
#include <string>

namespace sage {

// invalid user-facing configuration (CLI maps this to exit code 2)
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// context grew past a model's declared horizon
class ContextOverflowError : public std::runtime_error {
public:
    explicit ContextOverflowError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace sage
