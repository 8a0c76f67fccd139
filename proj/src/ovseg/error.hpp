#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ovseg {

// Every failure the engine can report. The C API maps these one-to-one onto
// ovseg_status values, so the order here is part of the ABI.
enum class ErrorCode : int {
    InvalidArgument = 1,
    InvalidDepth,
    OutOfBounds,
    BehindCamera,
    EmptyInput,
    SizeMismatch,
    FrameMismatch,
    ScheduleMismatch,
    Degenerate,
    ZeroNorm,
    AllInvalidDepth,
    AllNoise,
    DimMismatch,
    EmptyGT,
    NoAssociations,
    ParseFailure,
    NoObjects,
    NeverVisible,
    GatewayError,
    InsufficientViews,
    EmptyResults,
    TransportError,
    Io,
    Format,
    CountMismatch,
};

std::string_view to_string(ErrorCode code);

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

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace ovseg
