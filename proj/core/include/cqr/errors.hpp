#ifndef CQR_ERRORS_HPP
#define CQR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cqr {

/// Malformed or inconsistent input data (bad CSV cell, missing column, ...).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure (divergent training loss, non-finite values, ...).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid arguments or configuration.
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& msg) : std::invalid_argument(msg) {}
};

} // namespace cqr

#endif
