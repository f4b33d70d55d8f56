#pragma once

#include <stdexcept>
#include <string>

namespace ilat {

enum class ErrorKind {
    InvalidParams,
    InfiniteSupport,
    DomainError,
    NotInvertible,
    UnsupportedFamily,
    UnsupportedRegime,
    NotSynchronized,
    NotConverged,
    CoverageError,
    TooLarge,
    TooFewSamples,
    EmptySample,
    KindMismatch,
    ConfigError,
    SamplerOverflow,
    RejectionStarved,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception carrying a machine-readable kind.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParams: return "InvalidParams";
        case ErrorKind::InfiniteSupport: return "InfiniteSupport";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::NotInvertible: return "NotInvertible";
        case ErrorKind::UnsupportedFamily: return "UnsupportedFamily";
        case ErrorKind::UnsupportedRegime: return "UnsupportedRegime";
        case ErrorKind::NotSynchronized: return "NotSynchronized";
        case ErrorKind::NotConverged: return "NotConverged";
        case ErrorKind::CoverageError: return "CoverageError";
        case ErrorKind::TooLarge: return "TooLarge";
        case ErrorKind::TooFewSamples: return "TooFewSamples";
        case ErrorKind::EmptySample: return "EmptySample";
        case ErrorKind::KindMismatch: return "KindMismatch";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::SamplerOverflow: return "SamplerOverflow";
        case ErrorKind::RejectionStarved: return "RejectionStarved";
    }
    return "Error";
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace ilat
