#pragma once

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "termgraph/llm/provider.hpp"

namespace termgraph::llm {

// Trim plus collapse of internal whitespace runs, so cosmetic template edits
// do not invalidate recorded fixtures.
std::string canonicalize_prompt(std::string_view prompt);
std::string prompt_hash(std::string_view prompt);

// One line of a transcript file (JSON Lines):
//   {"hash": sha256(canonical prompt), "prompt": ..., "response": ...,
//    "prompt_tokens": n, "completion_tokens": n, "sample": k}
// "sample" is optional; a record without it answers every repeat of the
// prompt that has no sample-specific record.
struct TranscriptRecord {
  std::string prompt;
  std::string response;
  TokenUsage usage;
  std::optional<int> sample;
};

// Throws kTranscriptError on malformed lines, hash mismatches, or duplicate
// (prompt, sample) keys.
std::vector<TranscriptRecord> read_transcript(const std::filesystem::path& path);
std::vector<TranscriptRecord> parse_transcript(std::istream& in, const std::string& source);
void write_transcript_record(std::ostream& out, const TranscriptRecord& record);
void write_transcript(const std::filesystem::path& path, const std::vector<TranscriptRecord>& records);

enum class UnknownPromptPolicy { kError, kFixedFallback };

struct ReplayOptions {
  std::string model_id = "replay";
  bool structured_output = true;
  UnknownPromptPolicy unknown_policy = UnknownPromptPolicy::kError;
  std::string fallback_response;
  TokenUsage fallback_usage;
};

// Deterministic stand-in for a live model that serves recorded responses.
class ReplayProvider : public Provider {
 public:
  ReplayProvider(std::vector<TranscriptRecord> records, ReplayOptions options);
  static std::unique_ptr<ReplayProvider> from_file(const std::filesystem::path& path,
                                                   ReplayOptions options);

  ProviderResponse send(const std::string& prompt, const RequestOptions& options) override;
  ProviderCapabilities capabilities() const override { return {options_.structured_output}; }
  std::string model_id() const override { return options_.model_id; }

  long call_count() const noexcept { return calls_.load(); }
  std::vector<std::string> unknown_prompts() const;

 private:
  using Key = std::pair<std::string, int>;  // canonical prompt, sample (-1: any)

  ReplayOptions options_;
  std::map<Key, ProviderResponse> responses_;
  std::atomic<long> calls_{0};
  mutable std::mutex misses_mu_;
  std::vector<std::string> misses_;
};

// Passes calls through to another provider and appends each exchange to a
// transcript, producing fixtures for ReplayProvider.
class RecordingProvider : public Provider {
 public:
  RecordingProvider(Provider& inner, std::filesystem::path transcript_path);

  ProviderResponse send(const std::string& prompt, const RequestOptions& options) override;
  ProviderCapabilities capabilities() const override { return inner_.capabilities(); }
  std::string model_id() const override { return inner_.model_id(); }

 private:
  Provider& inner_;
  std::filesystem::path path_;
  std::mutex mu_;
};

}  // namespace termgraph::llm
