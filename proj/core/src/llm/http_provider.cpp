#include "termgraph/llm/http_provider.hpp"

#include <httplib.h>

#include <json.hpp>

#include "termgraph/error.hpp"

namespace termgraph::llm {

using nlohmann::json;

HttpChatProvider::HttpChatProvider(HttpProviderConfig config) : config_(std::move(config)) {
  if (config_.base_url.empty()) throw Error(ErrorCode::kConfigError, "provider base_url is empty");
  if (config_.model.empty()) throw Error(ErrorCode::kConfigError, "provider model is empty");
}

ProviderResponse HttpChatProvider::send(const std::string& prompt, const RequestOptions& options) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds);
  client.set_read_timeout(config_.timeout_seconds);
  if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

  json body;
  body["model"] = options.model.empty() ? config_.model : options.model;
  body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = options.temperature;
  if (options.max_tokens > 0) body["max_tokens"] = options.max_tokens;
  if (config_.structured_output) body["response_format"] = json{{"type", "json_object"}};

  auto res = client.Post(config_.path, body.dump(), "application/json");
  if (!res)
    throw TransientProviderError("provider request failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientProviderError("provider returned HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw Error(ErrorCode::kProviderError,
                "provider returned HTTP " + std::to_string(res->status) + ": " + res->body);

  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty())
    throw Error(ErrorCode::kProviderError, "provider reply has no choices");
  ProviderResponse out;
  const auto& message = reply["choices"][0]["message"];
  if (!message.contains("content") || !message["content"].is_string())
    throw Error(ErrorCode::kProviderError, "provider reply has no message content");
  out.text = message["content"].get<std::string>();
  if (reply.contains("usage")) {
    out.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
    out.usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
  }
  return out;
}

}  // namespace termgraph::llm
