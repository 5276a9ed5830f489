#include "cce/errors.hpp"

namespace cce {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::DuplicateConcept: return "DuplicateConcept";
    case ErrorCode::UnknownConcept: return "UnknownConcept";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::MissingSource: return "MissingSource";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::UnknownImage: return "UnknownImage";
    case ErrorCode::WrongClass: return "WrongClass";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::SelectorUnavailable: return "SelectorUnavailable";
    case ErrorCode::ClassifierUnavailable: return "ClassifierUnavailable";
    case ErrorCode::GrounderUnavailable: return "GrounderUnavailable";
    case ErrorCode::InpainterUnavailable: return "InpainterUnavailable";
    case ErrorCode::UnparsableResponse: return "UnparsableResponse";
    case ErrorCode::UnknownEdit: return "UnknownEdit";
    case ErrorCode::SourceMisclassified: return "SourceMisclassified";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ZeroBandwidth: return "ZeroBandwidth";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::IoError: return "IoError";
    }
    return "Error";
}

} // namespace cce
