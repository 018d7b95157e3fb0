#include "potforge/error.hpp"

namespace potforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNetwork: return "NetworkError";
    case ErrorCode::kAuth: return "AuthError";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kGenerationUnderflow: return "GenerationUnderflow";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kNoAnswerFound: return "NoAnswerFound";
    case ErrorCode::kAllQuestionsFailed: return "AllQuestionsFailed";
    case ErrorCode::kInstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::kEmptySampleSet: return "EmptySampleSet";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kSourceMismatch: return "SourceMismatch";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
    case ErrorCode::kConfigDrift: return "ConfigDrift";
    case ErrorCode::kCorruptLedger: return "CorruptLedger";
    case ErrorCode::kDuplicateRound: return "DuplicateRound";
    case ErrorCode::kAbortedRun: return "AbortedRun";
    case ErrorCode::kNothingToReport: return "NothingToReport";
  }
  return "Error";
}

}  // namespace potforge
