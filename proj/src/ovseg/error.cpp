#include "ovseg/error.hpp"

namespace ovseg {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidDepth: return "InvalidDepth";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::BehindCamera: return "BehindCamera";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::FrameMismatch: return "FrameMismatch";
        case ErrorCode::ScheduleMismatch: return "ScheduleMismatch";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::ZeroNorm: return "ZeroNorm";
        case ErrorCode::AllInvalidDepth: return "AllInvalidDepth";
        case ErrorCode::AllNoise: return "AllNoise";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::EmptyGT: return "EmptyGT";
        case ErrorCode::NoAssociations: return "NoAssociations";
        case ErrorCode::ParseFailure: return "ParseFailure";
        case ErrorCode::NoObjects: return "NoObjects";
        case ErrorCode::NeverVisible: return "NeverVisible";
        case ErrorCode::GatewayError: return "GatewayError";
        case ErrorCode::InsufficientViews: return "InsufficientViews";
        case ErrorCode::EmptyResults: return "EmptyResults";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Format: return "Format";
        case ErrorCode::CountMismatch: return "CountMismatch";
    }
    return "Unknown";
}

}  // namespace ovseg
