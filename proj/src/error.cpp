#include "notai/error.hpp"

namespace notai {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::EmptyDocument: return "empty_document";
    case ErrorCode::TextTooLong: return "text_too_long";
    case ErrorCode::DegenerateVariance: return "degenerate_variance";
    case ErrorCode::EmptyCorpus: return "empty_corpus";
    case ErrorCode::BackendUnavailable: return "backend_unavailable";
    case ErrorCode::BackendProtocol: return "backend_protocol";
    case ErrorCode::OutOfRange: return "out_of_range";
    case ErrorCode::MissingColumn: return "missing_column";
    case ErrorCode::SingleClass: return "single_class";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::SchemaMismatch: return "schema_mismatch";
    case ErrorCode::CorruptModel: return "corrupt_model";
    case ErrorCode::VersionMismatch: return "version_mismatch";
    case ErrorCode::InconsistentCover: return "inconsistent_cover";
    case ErrorCode::TooManyFeatures: return "too_many_features";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::UnknownFeature: return "unknown_feature";
    case ErrorCode::MalformedExplanation: return "malformed_explanation";
    case ErrorCode::TooSmall: return "too_small";
  }
  return "unknown";
}

}  // namespace notai
