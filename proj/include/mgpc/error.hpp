#pragma once

#include <stdexcept>
#include <string>

namespace mgpc {

enum class ErrorCode {
    argument,
    format,
    validation,
    geometry,
    numerical,
    io,
    calibration,
    undefined_metric,
    oracle,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception type thrown by every module; the code is what crosses the C boundary.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace mgpc
