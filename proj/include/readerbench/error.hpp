#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbench {

enum class ErrorKind {
    Validation,
    Argument,
    NotFound,
    Conflict,
    OutOfOrder,
    EndOfRound,
    Protocol,
    PredictorUnavailable,
    Io,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; the kind drives HTTP status codes
// and CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace rbench
