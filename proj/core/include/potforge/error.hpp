#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace potforge {

enum class ErrorCode {
  kNetwork,
  kAuth,
  kMalformedResponse,
  kDimensionMismatch,
  kEmptyInput,
  kInvalidArgument,
  kGenerationUnderflow,
  kIo,
  kEmptyCorpus,
  kNoAnswerFound,
  kAllQuestionsFailed,
  kInstanceTooLarge,
  kEmptySampleSet,
  kMissingGroundTruth,
  kSourceMismatch,
  kConfigInvalid,
  kConfigDrift,
  kCorruptLedger,
  kDuplicateRound,
  kAbortedRun,
  kNothingToReport,
};

std::string_view to_string(ErrorCode code);

// Domain error carried through every module. The CLI maps these to exit
// status 1; anything else escaping main is a bug.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace potforge
