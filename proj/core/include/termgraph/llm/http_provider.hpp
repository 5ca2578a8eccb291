#pragma once

#include <string>

#include "termgraph/llm/provider.hpp"

namespace termgraph::llm {

struct HttpProviderConfig {
  // Scheme, host and optional port, e.g. "https://api.openai.com" or
  // "http://localhost:11434".
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key;
  bool structured_output = true;
  int timeout_seconds = 120;
};

// Client for OpenAI-compatible chat-completion endpoints. 429 and 5xx replies
// and transport failures are reported as transient; other 4xx replies are
// permanent.
class HttpChatProvider : public Provider {
 public:
  explicit HttpChatProvider(HttpProviderConfig config);

  ProviderResponse send(const std::string& prompt, const RequestOptions& options) override;
  ProviderCapabilities capabilities() const override { return {config_.structured_output}; }
  std::string model_id() const override { return config_.model; }

 private:
  HttpProviderConfig config_;
};

}  // namespace termgraph::llm
