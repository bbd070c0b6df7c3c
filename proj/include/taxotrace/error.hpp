#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taxotrace {

enum class ErrorKind {
    Parse,         // malformed input document
    Validation,    // well-formed input that violates an invariant
    NotFound,      // unknown word, code, requirement, suggestion
    Precondition,  // caller broke an operation contract
    Conflict,      // state does not allow the operation (no open task, ...)
    Unauthorized,  // unknown session token
    Forbidden,     // valid session, wrong treatment arm for the operation
    Persistence,   // append to durable storage failed
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets the HTTP layer and
/// the CLI map failures to status codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace taxotrace
