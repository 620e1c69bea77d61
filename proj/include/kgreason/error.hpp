#pragma once

#include <stdexcept>
#include <string>

namespace kgreason {

enum class ErrorCode {
  kIo,
  kMalformedLine,
  kDuplicateId,
  kDanglingEdge,
  kUnknownNode,
  kFeatureAbsent,
  kEmptyGraph,
  kNoMatch,
  kMissingPlaceholder,
  kMalformedOutput,
  kTransport,
  kReplayMismatch,
  kInvalidConfig,
};

const char* to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace kgreason
