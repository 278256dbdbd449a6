// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ihs {

enum class ErrorKind {
    Ingest,
    Config,
    Validation,
    Format,
    Corruption,
    Lookup,
    Shape,
    Numerical,
    Contract,
    Protocol,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the engine. The kind is what the CLI maps to
/// its machine-parsable error line.
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

}  // namespace ihs
