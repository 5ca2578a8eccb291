#include "termgraph/error.hpp"

namespace termgraph {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kImportEmpty: return "ImportEmpty";
    case ErrorCode::kRowRejected: return "RowRejected";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kRunClosed: return "RunClosed";
    case ErrorCode::kQueryError: return "QueryError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmbedError: return "EmbedError";
    case ErrorCode::kMixedVectors: return "MixedVectors";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDependencyMissing: return "DependencyMissing";
    case ErrorCode::kTemplateError: return "TemplateError";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kKeyUnmapped: return "KeyUnmapped";
    case ErrorCode::kAccountingError: return "AccountingError";
    case ErrorCode::kTranscriptError: return "TranscriptError";
    case ErrorCode::kUnknownPrompt: return "UnknownPrompt";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kAggregationError: return "AggregationError";
    case ErrorCode::kAssessmentError: return "AssessmentError";
    case ErrorCode::kExpansionError: return "ExpansionError";
    case ErrorCode::kEmptySet: return "EmptySet";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kStorageError: return "StorageError";
  }
  return "Unknown";
}

}  // namespace termgraph
