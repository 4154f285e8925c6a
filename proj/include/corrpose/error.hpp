#pragma once

#include <stdexcept>
#include <string>

namespace corrpose {

enum class ErrorCode {
    NonPositiveDepth,
    DegenerateMesh,
    SparseSurfaceWarning,
    ShapeMismatch,
    TapeReuse,
    NonFiniteGradient,
    NonFinite,
    EmptyMask,
    Diverged,
    TableTooLarge,
    AllZeroMask,
    DegenerateConfiguration,
    NoRealSolution,
    NoValidHypothesis,
    EmptyVisibleSet,
    NoConfidentPixels,
    NoDepthOverlap,
    FullyOccluded,
    IoError,
    InvalidConfig,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
        case ErrorCode::DegenerateMesh: return "DegenerateMesh";
        case ErrorCode::SparseSurfaceWarning: return "SparseSurfaceWarning";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::TapeReuse: return "TapeReuse";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::TableTooLarge: return "TableTooLarge";
        case ErrorCode::AllZeroMask: return "AllZeroMask";
        case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
        case ErrorCode::NoRealSolution: return "NoRealSolution";
        case ErrorCode::NoValidHypothesis: return "NoValidHypothesis";
        case ErrorCode::EmptyVisibleSet: return "EmptyVisibleSet";
        case ErrorCode::NoConfidentPixels: return "NoConfidentPixels";
        case ErrorCode::NoDepthOverlap: return "NoDepthOverlap";
        case ErrorCode::FullyOccluded: return "FullyOccluded";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

/// Exception carrying a machine-checkable error code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace corrpose
