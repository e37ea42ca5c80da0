#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace notai {

enum class ErrorCode {
  InvalidArgument,
  Io,
  EmptyDocument,
  TextTooLong,
  DegenerateVariance,
  EmptyCorpus,
  BackendUnavailable,
  BackendProtocol,
  OutOfRange,
  MissingColumn,
  SingleClass,
  DimensionMismatch,
  SchemaMismatch,
  CorruptModel,
  VersionMismatch,
  InconsistentCover,
  TooManyFeatures,
  EmptyDataset,
  UnknownFeature,
  MalformedExplanation,
  TooSmall,
};

// Stable snake_case identifier used in HTTP error bodies and CLI diagnostics.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace notai
