#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isoflow {

enum class ErrorCode {
    NonPositiveFactor,
    DivergentArea,
    NumericalDifferentiationFailure,
    DivergentTail,
    InvalidCurve,
    SelfIntersection,
    TriangulationFailure,
    DomainError,
    ScanExhausted,
    Stalled,
    Collapsed,
    AmbiguousPinch,
    AllStartsFailed,
    StepUnstable,
    ExtinctPastT,
    ConfigError,
};

constexpr std::string_view error_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonPositiveFactor: return "NonPositiveFactor";
    case ErrorCode::DivergentArea: return "DivergentArea";
    case ErrorCode::NumericalDifferentiationFailure: return "NumericalDifferentiationFailure";
    case ErrorCode::DivergentTail: return "DivergentTail";
    case ErrorCode::InvalidCurve: return "InvalidCurve";
    case ErrorCode::SelfIntersection: return "SelfIntersection";
    case ErrorCode::TriangulationFailure: return "TriangulationFailure";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::ScanExhausted: return "ScanExhausted";
    case ErrorCode::Stalled: return "Stalled";
    case ErrorCode::Collapsed: return "Collapsed";
    case ErrorCode::AmbiguousPinch: return "AmbiguousPinch";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::StepUnstable: return "StepUnstable";
    case ErrorCode::ExtinctPastT: return "ExtinctPastT";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Domain error carrying one of the documented error names.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string_view name() const noexcept { return error_name(code_); }

private:
    ErrorCode code_;
};

} // namespace isoflow
