#pragma once

#include <stdexcept>
#include <string>

namespace vrpseg {

enum class ErrorCode {
    EmptyMask,
    ShapeMismatch,
    NonFiniteInput,
    KOutOfRange,
    InsufficientForeground,
    MissingPrototype,
    BadShape,
    OutOfBounds,
    EmptyAfterThreshold,
    NonBinaryGT,
    UnknownFold,
    InsufficientItems,
    EmptyClass,
    BadConfig,
    MissingFile,
    CorruptManifest,
    VersionMismatch,
    CorruptTensor,
    ClassMismatch,
    DivergedLoss,
    ConfigError,
};

const char* error_code_name(ErrorCode code);

/// Exit-code category used by the CLI: 0 ok, 2 config, 3 data, 4 diverged.
int error_exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace vrpseg
