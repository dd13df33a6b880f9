#pragma once

#include <stdexcept>
#include <string>

namespace hemogen {

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorKind : int {
    validation = 1,
    io = 2,
    internal = 3,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

}  // namespace hemogen
