#include "termgraph/llm/replay.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/util/hash.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::llm {

namespace {
using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void transcript_error(const std::string& source, std::size_t line,
                                   const std::string& message) {
  throw Error(ErrorCode::kTranscriptError,
              source + ":" + std::to_string(line) + ": " + message);
}
}  // namespace

std::string canonicalize_prompt(std::string_view prompt) {
  return text::collapse_whitespace(prompt);
}

std::string prompt_hash(std::string_view prompt) {
  return hash::sha256_hex(canonicalize_prompt(prompt));
}

std::vector<TranscriptRecord> parse_transcript(std::istream& in, const std::string& source) {
  std::vector<TranscriptRecord> records;
  std::map<std::pair<std::string, int>, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) transcript_error(source, line_no, "not a JSON object");
    for (const char* field : {"prompt", "response"})
      if (!j.contains(field) || !j[field].is_string())
        transcript_error(source, line_no, std::string("missing string field '") + field + "'");
    TranscriptRecord record;
    record.prompt = j["prompt"].get<std::string>();
    record.response = j["response"].get<std::string>();
    for (auto [field, target] : {std::pair{"prompt_tokens", &record.usage.prompt_tokens},
                                 std::pair{"completion_tokens", &record.usage.completion_tokens}}) {
      if (!j.contains(field)) continue;
      if (!j[field].is_number_integer() || j[field].get<long>() < 0)
        transcript_error(source, line_no, std::string("'") + field + "' must be a non-negative integer");
      *target = j[field].get<long>();
    }
    if (j.contains("sample") && !j["sample"].is_null()) {
      if (!j["sample"].is_number_integer() || j["sample"].get<int>() < 0)
        transcript_error(source, line_no, "'sample' must be a non-negative integer");
      record.sample = j["sample"].get<int>();
    }
    if (j.contains("hash")) {
      if (!j["hash"].is_string() || j["hash"].get<std::string>() != prompt_hash(record.prompt))
        transcript_error(source, line_no, "hash does not match the canonical prompt");
    }
    auto key = std::pair{canonicalize_prompt(record.prompt), record.sample.value_or(-1)};
    if (auto [it, inserted] = seen.emplace(key, line_no); !inserted)
      transcript_error(source, line_no,
                       "duplicate prompt (first recorded on line " + std::to_string(it->second) + ")");
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<TranscriptRecord> read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kTranscriptError, "cannot open transcript " + path.string());
  return parse_transcript(in, path.string());
}

void write_transcript_record(std::ostream& out, const TranscriptRecord& record) {
  ordered_json j;
  j["hash"] = prompt_hash(record.prompt);
  j["prompt"] = record.prompt;
  j["response"] = record.response;
  j["prompt_tokens"] = record.usage.prompt_tokens;
  j["completion_tokens"] = record.usage.completion_tokens;
  if (record.sample) j["sample"] = *record.sample;
  out << j.dump() << '\n';
}

void write_transcript(const std::filesystem::path& path,
                      const std::vector<TranscriptRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kTranscriptError, "cannot write transcript " + path.string());
  for (const auto& r : records) write_transcript_record(out, r);
}

ReplayProvider::ReplayProvider(std::vector<TranscriptRecord> records, ReplayOptions options)
    : options_(std::move(options)) {
  for (auto& r : records) {
    Key key{canonicalize_prompt(r.prompt), r.sample.value_or(-1)};
    if (!responses_.emplace(key, ProviderResponse{std::move(r.response), r.usage}).second)
      throw Error(ErrorCode::kTranscriptError, "duplicate prompt in transcript");
  }
}

std::unique_ptr<ReplayProvider> ReplayProvider::from_file(const std::filesystem::path& path,
                                                          ReplayOptions options) {
  return std::make_unique<ReplayProvider>(read_transcript(path), std::move(options));
}

ProviderResponse ReplayProvider::send(const std::string& prompt, const RequestOptions& options) {
  ++calls_;
  auto canonical = canonicalize_prompt(prompt);
  if (auto it = responses_.find({canonical, options.sample_index}); it != responses_.end())
    return it->second;
  if (auto it = responses_.find({canonical, -1}); it != responses_.end()) return it->second;
  {
    std::lock_guard lock(misses_mu_);
    misses_.push_back(canonical);
  }
  if (options_.unknown_policy == UnknownPromptPolicy::kFixedFallback)
    return {options_.fallback_response, options_.fallback_usage};
  throw Error(ErrorCode::kUnknownPrompt,
              "no recorded response for prompt with hash " + hash::sha256_hex(canonical));
}

std::vector<std::string> ReplayProvider::unknown_prompts() const {
  std::lock_guard lock(misses_mu_);
  return misses_;
}

RecordingProvider::RecordingProvider(Provider& inner, std::filesystem::path transcript_path)
    : inner_(inner), path_(std::move(transcript_path)) {}

ProviderResponse RecordingProvider::send(const std::string& prompt, const RequestOptions& options) {
  auto response = inner_.send(prompt, options);
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  if (!out) throw Error(ErrorCode::kTranscriptError, "cannot append to " + path_.string());
  write_transcript_record(out, {prompt, response.text, response.usage,
                                options.sample_index > 0 ? std::optional(options.sample_index)
                                                         : std::nullopt});
  return response;
}

}  // namespace termgraph::llm
