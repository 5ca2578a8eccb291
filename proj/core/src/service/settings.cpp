#include "termgraph/service/settings.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::service {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) config_error(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& target, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    target = j[key].get<T>();
  } catch (const std::exception&) {
    config_error(where + "." + key + " has the wrong type");
  }
}

llm::Money money(const json& j, const std::string& field) {
  try {
    if (j.is_string()) return llm::Money::parse(j.get<std::string>());
    if (j.is_number()) return llm::Money::parse(j.dump());
  } catch (const Error& e) {
    config_error(field + ": " + e.what());
  }
  config_error(field + " must be a decimal string or number");
}

llm::Money env_money(const char* value, const char* name) {
  try {
    return llm::Money::parse(text::trim(value));
  } catch (const Error& e) {
    config_error(std::string(name) + ": " + e.what());
  }
}

}  // namespace

Settings parse_settings(std::string_view json_text) {
  auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) config_error("settings file is not a JSON object");
  check_keys(j, {"store", "provider", "embedder", "pricing", "budget", "host", "port", "static_dir",
                 "expansion_styles"},
             "settings");
  Settings s;
  read(j, "store", s.store_path, "settings");
  read(j, "host", s.host, "settings");
  read(j, "port", s.port, "settings");
  read(j, "static_dir", s.static_dir, "settings");
  if (j.contains("provider")) {
    const auto& p = j["provider"];
    check_keys(p, {"kind", "transcript", "unknown_policy", "fallback_response", "structured_output",
                   "base_url", "path", "model", "api_key", "temperature", "max_tokens",
                   "timeout_seconds"},
               "provider");
    auto& ps = s.provider;
    read(p, "kind", ps.kind, "provider");
    read(p, "transcript", ps.transcript, "provider");
    read(p, "unknown_policy", ps.unknown_policy, "provider");
    read(p, "fallback_response", ps.fallback_response, "provider");
    read(p, "structured_output", ps.structured_output, "provider");
    read(p, "base_url", ps.base_url, "provider");
    read(p, "path", ps.path, "provider");
    read(p, "model", ps.model, "provider");
    read(p, "api_key", ps.api_key, "provider");
    read(p, "temperature", ps.temperature, "provider");
    read(p, "max_tokens", ps.max_tokens, "provider");
    read(p, "timeout_seconds", ps.timeout_seconds, "provider");
  }
  if (j.contains("embedder")) {
    const auto& e = j["embedder"];
    check_keys(e, {"model_id", "dimension", "seed", "lookup_file"}, "embedder");
    read(e, "model_id", s.embedder.model_id, "embedder");
    read(e, "dimension", s.embedder.dimension, "embedder");
    read(e, "seed", s.embedder.seed, "embedder");
    read(e, "lookup_file", s.embedder.lookup_file, "embedder");
  }
  if (j.contains("pricing")) {
    const auto& p = j["pricing"];
    check_keys(p, {"prompt_token", "completion_token"}, "pricing");
    if (p.contains("prompt_token")) s.pricing.per_prompt_token = money(p["prompt_token"], "pricing.prompt_token");
    if (p.contains("completion_token"))
      s.pricing.per_completion_token = money(p["completion_token"], "pricing.completion_token");
  }
  if (j.contains("budget") && !j["budget"].is_null()) s.budget = money(j["budget"], "budget");
  if (j.contains("expansion_styles")) {
    if (!j["expansion_styles"].is_object()) config_error("expansion_styles must be an object");
    for (const auto& [name, instruction] : j["expansion_styles"].items())
      s.expansion_styles[name] = instruction.get<std::string>();
  }
  if (s.embedder.dimension == 0) config_error("embedder.dimension must be positive");
  return s;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open settings file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_settings(ss.str());
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void apply_env_overrides(Settings& s, const EnvLookup& getenv) {
  auto get = [&](const char* name) -> const char* { return getenv(name); };
  if (auto v = get("TERMGRAPH_STORE")) s.store_path = v;
  if (auto v = get("TERMGRAPH_PROVIDER")) s.provider.kind = v;
  if (auto v = get("TERMGRAPH_TRANSCRIPT")) s.provider.transcript = v;
  if (auto v = get("TERMGRAPH_MODEL")) s.provider.model = v;
  if (auto v = get("TERMGRAPH_BASE_URL")) s.provider.base_url = v;
  if (auto v = get("TERMGRAPH_API_KEY")) s.provider.api_key = v;
  if (auto v = get("TERMGRAPH_PRICE_PROMPT"))
    s.pricing.per_prompt_token = env_money(v, "TERMGRAPH_PRICE_PROMPT");
  if (auto v = get("TERMGRAPH_PRICE_COMPLETION"))
    s.pricing.per_completion_token = env_money(v, "TERMGRAPH_PRICE_COMPLETION");
  if (auto v = get("TERMGRAPH_BUDGET")) {
    if (text::trim(v).empty())
      s.budget.reset();
    else
      s.budget = env_money(v, "TERMGRAPH_BUDGET");
  }
  if (auto v = get("TERMGRAPH_HOST")) s.host = v;
  if (auto v = get("TERMGRAPH_PORT")) {
    auto port = text::parse_number(v);
    if (!port || *port < 0 || *port > 65535 || *port != static_cast<int>(*port))
      config_error(std::string("TERMGRAPH_PORT is not a port number: ") + v);
    s.port = static_cast<int>(*port);
  }
  if (auto v = get("TERMGRAPH_EMBEDDER_FILE")) s.embedder.lookup_file = v;
  if (auto v = get("TERMGRAPH_STATIC_DIR")) s.static_dir = v;
}

void apply_env_overrides(Settings& settings) {
  apply_env_overrides(settings, [](const char* name) -> const char* { return std::getenv(name); });
}

}  // namespace termgraph::service
