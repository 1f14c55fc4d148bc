#pragma once

#include <stdexcept>
#include <string>

namespace patchprobe {

enum class ErrorCode {
    // diff / source model
    MalformedDiff,
    MultiFileDiff,
    EmptyPatch,
    FunctionNotFound,
    UnbalancedBraces,
    PatchLineNotFound,
    // enhance
    NoPatchLines,
    // ingest
    EmptyInput,
    AnchorMissing,
    // localize / provider
    OversizePrompt,
    TransportError,
    RateLimited,
    ReplayMiss,
    UnparseableResponse,
    OutOfRangeLines,
    AllSegmentsFailed,
    // verify
    UnsupportedOperator,
    TooManyVariables,
    ProviderExhausted,
    // pipeline
    ManifestMalformed,
    ConfigError,
};

const char* error_code_name(ErrorCode code);

/// Exception type carrying a stable error code plus a human-readable message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace patchprobe
