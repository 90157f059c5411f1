#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace physaudit {

// Typed runtime error: a short machine-readable code plus a human message.
// Codes are stable identifiers ("empty_clip", "truncated_data", ...) so
// callers and tests can match on them without parsing prose.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace physaudit
