#pragma once

#include <stdexcept>
#include <string>

namespace nss {

// Shape/rank mismatches detected before any numeric work.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files: bad IDX headers, bundle byte-count mismatches, version skew.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user-supplied configuration (parameter ranges, budgets, paths).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or diverging computations.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nss
