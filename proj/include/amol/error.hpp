#pragma once

#include <stdexcept>
#include <string>

namespace amol {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
    invalid_argument = 1,
    dimension_mismatch = 2,
    io = 3,
    parse = 4,
    schema = 5,
    degenerate = 6,
    numerical = 7,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const char* what) {
    if (!cond) fail(code, what);
}

}  // namespace amol
