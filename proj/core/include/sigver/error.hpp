#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sigver {

enum class ErrorCode {
    // input / data
    FileNotFound,
    UnsupportedFormat,
    DecodeError,
    NoInk,
    MissingDirectory,
    UnparsableFilename,
    IoError,
    ParseError,
    CorruptFile,
    TooFewSamples,
    EmptyInput,
    SingleClass,
    ShapeMismatch,
    DimensionMismatch,
    LengthMismatch,
    OutOfRange,
    UnknownWriter,
    MissingForgeryHead,
    // configuration / usage
    InvalidConfig,
    InvalidArgument,
    // numeric
    DegenerateLeaf,
    NoConvergence,
};

constexpr const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::FileNotFound: return "FileNotFound";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::DecodeError: return "DecodeError";
        case ErrorCode::NoInk: return "NoInk";
        case ErrorCode::MissingDirectory: return "MissingDirectory";
        case ErrorCode::UnparsableFilename: return "UnparsableFilename";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::CorruptFile: return "CorruptFile";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::UnknownWriter: return "UnknownWriter";
        case ErrorCode::MissingForgeryHead: return "MissingForgeryHead";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::DegenerateLeaf: return "DegenerateLeaf";
        case ErrorCode::NoConvergence: return "NoConvergence";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    Error(ErrorCode code, const std::string& message, std::string stage)
        : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

    ErrorCode code() const noexcept { return code_; }

    // Pipeline stage that raised the error; empty outside run_experiment.
    const std::string& stage() const noexcept { return stage_; }

private:
    ErrorCode code_;
    std::string stage_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace sigver
