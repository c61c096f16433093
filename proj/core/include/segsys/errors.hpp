#pragma once

#include <stdexcept>
#include <string>

namespace segsys {

// Broad classes of failure. The service layer maps these onto HTTP status
// codes; the CLI maps them onto exit codes.
enum class ErrorKind {
    contract,          // caller broke a precondition (dimension mismatch, n < 1, ...)
    invalid_argument,  // malformed user input
    invalid_geometry,
    not_found,
    conflict,
    undefined_metric,
    unprocessable,     // well-formed request that cannot be satisfied (no data)
    io,
    storage,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    // Machine-readable code, stable across releases.
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void contract_violation(const std::string& message) {
    throw Error(ErrorKind::contract, "contract_violation", message);
}

inline void require(bool condition, const char* message) {
    if (!condition) contract_violation(message);
}

}  // namespace segsys
