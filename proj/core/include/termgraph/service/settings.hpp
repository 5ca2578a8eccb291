#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "termgraph/extract/spec.hpp"
#include "termgraph/llm/cost_ledger.hpp"

namespace termgraph::service {

struct ProviderSettings {
  // "replay", "http", or "record" (http, appending every exchange to the
  // transcript).
  std::string kind = "replay";
  std::string transcript;
  // "error" or "fallback".
  std::string unknown_policy = "error";
  std::string fallback_response;
  bool structured_output = true;
  std::string base_url;
  std::string path = "/v1/chat/completions";
  std::string model = "replay";
  std::string api_key;
  double temperature = 0.0;
  int max_tokens = 0;
  int timeout_seconds = 120;
};

struct EmbedderSettings {
  std::string model_id = "fixture-hash-v1";
  std::size_t dimension = 32;
  std::uint64_t seed = 0;
  // Optional lookup file; see FixtureEmbedder.
  std::string lookup_file;
};

struct Settings {
  std::string store_path = "termgraph.db";
  ProviderSettings provider;
  EmbedderSettings embedder;
  // Used when a run configuration leaves pricing or budget out, and for
  // code-set expansions.
  llm::Pricing pricing;
  std::optional<llm::Money> budget;
  std::string host = "127.0.0.1";
  int port = 8080;
  // Directory of UI assets served at "/" (optional).
  std::string static_dir;
  extract::ExpansionStyles expansion_styles = extract::default_expansion_styles();
};

// Reads a JSON settings file; unknown keys are rejected. Throws kNotFound for
// a missing file and kConfigError for bad content.
Settings load_settings(const std::string& path);
Settings parse_settings(std::string_view json_text);

using EnvLookup = std::function<const char*(const char*)>;

// Applies TERMGRAPH_STORE, TERMGRAPH_PROVIDER, TERMGRAPH_TRANSCRIPT,
// TERMGRAPH_MODEL, TERMGRAPH_BASE_URL, TERMGRAPH_API_KEY,
// TERMGRAPH_PRICE_PROMPT, TERMGRAPH_PRICE_COMPLETION, TERMGRAPH_BUDGET,
// TERMGRAPH_HOST, TERMGRAPH_PORT, TERMGRAPH_EMBEDDER_FILE and
// TERMGRAPH_STATIC_DIR. An empty TERMGRAPH_BUDGET removes the budget.
void apply_env_overrides(Settings& settings, const EnvLookup& getenv);
void apply_env_overrides(Settings& settings);

}  // namespace termgraph::service
