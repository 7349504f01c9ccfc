#pragma once

#include <stdexcept>
#include <string>

namespace fccnn {

enum class ErrorCode {
    invalid_argument = 1,
    shape = 2,
    io = 3,
    format = 4,
    numeric = 5,
    internal = 6,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries a code so the C layer can map it
// onto a status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline Error shape_error(const std::string& message) { return Error(ErrorCode::shape, message); }
inline Error argument_error(const std::string& message) { return Error(ErrorCode::invalid_argument, message); }
inline Error io_error(const std::string& message) { return Error(ErrorCode::io, message); }
inline Error format_error(const std::string& message) { return Error(ErrorCode::format, message); }
inline Error numeric_error(const std::string& message) { return Error(ErrorCode::numeric, message); }

} // namespace fccnn
