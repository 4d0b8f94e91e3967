#include "vrpseg/error.hpp"

namespace vrpseg {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::KOutOfRange: return "KOutOfRange";
        case ErrorCode::InsufficientForeground: return "InsufficientForeground";
        case ErrorCode::MissingPrototype: return "MissingPrototype";
        case ErrorCode::BadShape: return "BadShape";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::EmptyAfterThreshold: return "EmptyAfterThreshold";
        case ErrorCode::NonBinaryGT: return "NonBinaryGT";
        case ErrorCode::UnknownFold: return "UnknownFold";
        case ErrorCode::InsufficientItems: return "InsufficientItems";
        case ErrorCode::EmptyClass: return "EmptyClass";
        case ErrorCode::BadConfig: return "BadConfig";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::CorruptManifest: return "CorruptManifest";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::CorruptTensor: return "CorruptTensor";
        case ErrorCode::ClassMismatch: return "ClassMismatch";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

int error_exit_code(ErrorCode code) {
    switch (code) {
        case ErrorCode::BadConfig:
        case ErrorCode::ConfigError:
        case ErrorCode::KOutOfRange:
        case ErrorCode::UnknownFold:
        case ErrorCode::VersionMismatch:
            return 2;
        case ErrorCode::DivergedLoss:
            return 4;
        default:
            return 3;
    }
}

}  // namespace vrpseg
