#pragma once

#include <stdexcept>
#include <string>

namespace thinpaint {

// Invalid or inconsistent configuration (bad key, bad value, missing path in config).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Problems with input data: unreadable files, bad image formats, shape mismatches.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values or other numeric breakdown during training/inference.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace thinpaint
