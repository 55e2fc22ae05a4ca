#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace affine_curves {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments at an API boundary (bad horizons, empty schedules, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// Parameter set violates one or more model invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Model-level failure, e.g. a singular P-measure drift.
class ModelError : public Error {
public:
    using Error::Error;
};

/// A jump coordinate of the Riccati solution approached the pole of the
/// exponential-jump transform.
class SingularityError : public Error {
public:
    SingularityError(const std::string& what, double tau) : Error(what), tau_(tau) {}
    double tau() const noexcept { return tau_; }

private:
    double tau_;
};

/// Malformed input file; row/column are 1-based, 0 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(format(what, row, column)), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string format(const std::string& what, std::size_t row, std::size_t column) {
        std::string out = what;
        if (row != 0) out += " (row " + std::to_string(row);
        if (column != 0) out += (row != 0 ? ", column " : " (column ") + std::to_string(column);
        if (row != 0 || column != 0) out += ")";
        return out;
    }

    std::size_t row_;
    std::size_t column_;
};

}  // namespace affine_curves
