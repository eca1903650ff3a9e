#pragma once

#include <stdexcept>
#include <string>

namespace wz {

enum class Errc {
    NonUniformSampling,
    TooShort,
    EmptyInterval,
    ClassUnderrepresented,
    MismatchedControlPoints,
    ZeroReference,
    IncompleteRuns,
    LayoutMismatch,
    CollisionDetected,
    NoApplicableAction,
    Clamped,
    ParseError,
    SchemaError,
    InvalidConfig,
    IoError,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::NonUniformSampling: return "NonUniformSampling";
        case Errc::TooShort: return "TooShort";
        case Errc::EmptyInterval: return "EmptyInterval";
        case Errc::ClassUnderrepresented: return "ClassUnderrepresented";
        case Errc::MismatchedControlPoints: return "MismatchedControlPoints";
        case Errc::ZeroReference: return "ZeroReference";
        case Errc::IncompleteRuns: return "IncompleteRuns";
        case Errc::LayoutMismatch: return "LayoutMismatch";
        case Errc::CollisionDetected: return "CollisionDetected";
        case Errc::NoApplicableAction: return "NoApplicableAction";
        case Errc::Clamped: return "Clamped";
        case Errc::ParseError: return "ParseError";
        case Errc::SchemaError: return "SchemaError";
        case Errc::InvalidConfig: return "InvalidConfig";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

/// Library-wide exception type carrying a machine-readable error code.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

} // namespace wz
