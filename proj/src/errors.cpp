#include "patchprobe/errors.hpp"

namespace patchprobe {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedDiff: return "MalformedDiff";
    case ErrorCode::MultiFileDiff: return "MultiFileDiff";
    case ErrorCode::EmptyPatch: return "EmptyPatch";
    case ErrorCode::FunctionNotFound: return "FunctionNotFound";
    case ErrorCode::UnbalancedBraces: return "UnbalancedBraces";
    case ErrorCode::PatchLineNotFound: return "PatchLineNotFound";
    case ErrorCode::NoPatchLines: return "NoPatchLines";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AnchorMissing: return "AnchorMissing";
    case ErrorCode::OversizePrompt: return "OversizePrompt";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::UnparseableResponse: return "UnparseableResponse";
    case ErrorCode::OutOfRangeLines: return "OutOfRangeLines";
    case ErrorCode::AllSegmentsFailed: return "AllSegmentsFailed";
    case ErrorCode::UnsupportedOperator: return "UnsupportedOperator";
    case ErrorCode::TooManyVariables: return "TooManyVariables";
    case ErrorCode::ProviderExhausted: return "ProviderExhausted";
    case ErrorCode::ManifestMalformed: return "ManifestMalformed";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

} // namespace patchprobe
