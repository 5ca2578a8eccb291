#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace termgraph {

enum class ErrorCode {
  kImportEmpty,
  kRowRejected,
  kNotFound,
  kRunClosed,
  kQueryError,
  kInvalidArgument,
  kEmbedError,
  kMixedVectors,
  kZeroVector,
  kDependencyMissing,
  kTemplateError,
  kParseError,
  kKeyUnmapped,
  kAccountingError,
  kTranscriptError,
  kUnknownPrompt,
  kProviderError,
  kAggregationError,
  kAssessmentError,
  kExpansionError,
  kEmptySet,
  kConfigError,
  kStorageError,
};

std::string_view error_code_name(ErrorCode code);

// Base of every error the library throws; code() is stable and machine-readable.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw)
      : Error(ErrorCode::kParseError, message), raw_(std::move(raw)) {}

  // The unparsed payload, preserved for audit.
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

class KeyUnmapped : public Error {
 public:
  explicit KeyUnmapped(std::string key)
      : Error(ErrorCode::kKeyUnmapped, "dictionary key not mapped: '" + key + "'"),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class QueryError : public Error {
 public:
  QueryError(const std::string& message, std::size_t position)
      : Error(ErrorCode::kQueryError,
              message + " (at offset " + std::to_string(position) + ")"),
        position_(position) {}

  // Byte offset into the query text where the problem was detected.
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Provider failure that may succeed on retry. Tokens already consumed by the
// failed attempt are carried so they can still be billed.
class TransientProviderError : public Error {
 public:
  TransientProviderError(const std::string& message, long prompt_tokens = 0,
                         long completion_tokens = 0)
      : Error(ErrorCode::kProviderError, message),
        prompt_tokens_(prompt_tokens),
        completion_tokens_(completion_tokens) {}

  long prompt_tokens() const noexcept { return prompt_tokens_; }
  long completion_tokens() const noexcept { return completion_tokens_; }

 private:
  long prompt_tokens_;
  long completion_tokens_;
};

}  // namespace termgraph
