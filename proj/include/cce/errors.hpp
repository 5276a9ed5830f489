#pragma once

#include <stdexcept>
#include <string>

namespace cce {

enum class ErrorCode {
    ParseError,
    DisconnectedGraph,
    DuplicateConcept,
    UnknownConcept,
    Infeasible,
    TooLarge,
    EmptyCandidates,
    MissingSource,
    EmptyCorpus,
    UnknownImage,
    WrongClass,
    ConfigError,
    SelectorUnavailable,
    ClassifierUnavailable,
    GrounderUnavailable,
    InpainterUnavailable,
    UnparsableResponse,
    UnknownEdit,
    SourceMisclassified,
    SchemaMismatch,
    EmptyInput,
    LengthMismatch,
    ZeroVector,
    ZeroBandwidth,
    DegenerateCovariance,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace cce
