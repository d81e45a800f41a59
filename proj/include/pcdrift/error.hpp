#pragma once

#include <stdexcept>
#include <string>

namespace pcdrift {

/// Broad failure class. Maps one-to-one onto the CLI exit codes.
enum class ErrorKind { config = 1, data = 2, numerical = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorKind::config, message) {}
};

/// Malformed input, unusable series, unwritable output.
class DataError : public Error {
public:
    explicit DataError(const std::string& message) : Error(ErrorKind::data, message) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& message) : Error(ErrorKind::numerical, message) {}
};

/// Partial correlations (and hence KMO) cannot be formed for a matrix.
class NotEstimableError : public NumericalError {
public:
    explicit NotEstimableError(const std::string& detail)
        : NumericalError("KMO not estimable: " + detail) {}
};

/// Jacobi iteration budget exhausted.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& message, double off_norm)
        : NumericalError(message), off_norm_(off_norm) {}

    [[nodiscard]] double off_norm() const noexcept { return off_norm_; }

private:
    double off_norm_;
};

}  // namespace pcdrift
