#include "termgraph/service/workspace.hpp"

#include <set>

#include "termgraph/error.hpp"
#include "termgraph/llm/http_provider.hpp"
#include "termgraph/llm/replay.hpp"
#include "termgraph/store/code_filter.hpp"

namespace termgraph::service {

std::unique_ptr<llm::Provider> make_provider(const ProviderSettings& s,
                                             std::unique_ptr<llm::Provider>& inner) {
  if (s.kind == "replay") {
    llm::ReplayOptions options;
    options.model_id = s.model;
    options.structured_output = s.structured_output;
    if (s.unknown_policy == "fallback")
      options.unknown_policy = llm::UnknownPromptPolicy::kFixedFallback;
    else if (s.unknown_policy != "error")
      throw Error(ErrorCode::kConfigError, "unknown_policy must be 'error' or 'fallback'");
    options.fallback_response = s.fallback_response;
    if (s.transcript.empty())
      throw Error(ErrorCode::kConfigError, "the replay provider needs a transcript");
    return llm::ReplayProvider::from_file(s.transcript, options);
  }
  if (s.kind == "http" || s.kind == "record") {
    if (s.base_url.empty()) throw Error(ErrorCode::kConfigError, "provider base_url is not set");
    llm::HttpProviderConfig config{s.base_url, s.path, s.model, s.api_key, s.structured_output,
                                   s.timeout_seconds};
    auto http = std::make_unique<llm::HttpChatProvider>(config);
    if (s.kind == "http") return http;
    if (s.transcript.empty())
      throw Error(ErrorCode::kConfigError, "the record provider needs a transcript path");
    inner = std::move(http);
    return std::make_unique<llm::RecordingProvider>(*inner, s.transcript);
  }
  throw Error(ErrorCode::kConfigError, "unknown provider kind '" + s.kind + "'");
}

std::unique_ptr<embed::Embedder> make_embedder(const EmbedderSettings& s) {
  if (s.lookup_file.empty())
    return std::make_unique<embed::FixtureEmbedder>(s.model_id, s.dimension, s.seed);
  return std::make_unique<embed::FixtureEmbedder>(
      embed::FixtureEmbedder::from_file(s.lookup_file, s.model_id, s.dimension, s.seed));
}

Workspace::Workspace(Settings settings) : Workspace(std::move(settings), nullptr, nullptr) {}

Workspace::Workspace(Settings settings, std::unique_ptr<llm::Provider> provider,
                     std::unique_ptr<embed::Embedder> embedder)
    : settings_(std::move(settings)),
      provider_(std::move(provider)) {
  store_ = std::make_unique<store::Store>(settings_.store_path);
  embedder_ = embedder ? std::move(embedder) : make_embedder(settings_.embedder);
  embeddings_ = std::make_unique<embed::EmbeddingService>(*embedder_, *store_);
  matcher_ = std::make_unique<match::Matcher>(*store_, *embeddings_);
}

Workspace::~Workspace() = default;

llm::Gateway& Workspace::gateway() {
  std::lock_guard lock(provider_mu_);
  if (!gateway_) {
    if (!provider_) provider_ = make_provider(settings_.provider, inner_provider_);
    llm::RequestOptions defaults;
    defaults.model = settings_.provider.model;
    defaults.temperature = settings_.provider.temperature;
    defaults.max_tokens = settings_.provider.max_tokens;
    gateway_ = std::make_unique<llm::Gateway>(*provider_, defaults);
  }
  return *gateway_;
}

store::ImportReport Workspace::import_terminology(const std::string& name,
                                                  const store::ParsedRows& parsed) {
  auto report = store_->import_terminology(name, parsed.rows);
  // The store only sees rows that parsed; report positions in the input.
  report.rows_read = parsed.rows_read;
  report.rows_rejected += parsed.rejections.size();
  report.rejections.insert(report.rejections.end(), parsed.rejections.begin(),
                           parsed.rejections.end());

  std::set<std::string> seen;
  for (const auto& code : report.terminology.codes) {
    std::vector<std::string> texts;
    for (const auto& s : code.strings) {
      texts.push_back(s.text);
      if (seen.insert(s.text).second) embeddings_->embed_string(s.text);
    }
    embeddings_->summary_vector(embed::code_owner(report.terminology.name, code.code_id), texts);
  }
  return report;
}

void Workspace::import_hierarchy(const std::string& name,
                                 const std::vector<store::HierarchyEdge>& edges) {
  store_->import_hierarchy(name, edges);
}

extract::ExpansionStyles Workspace::merged_styles(const extract::ExpansionStyles& extra) const {
  auto styles = settings_.expansion_styles;
  for (const auto& [name, instruction] : extra) styles[name] = instruction;
  return styles;
}

CodeSetResult Workspace::create_code_set(const std::string& terminology, const std::string& name,
                                         const std::string& filter,
                                         const std::optional<std::string>& expansion_style) {
  auto term = store_->find_terminology(terminology);
  if (!term) throw Error(ErrorCode::kNotFound, "no terminology named '" + terminology + "'");
  if (expansion_style && !settings_.expansion_styles.count(*expansion_style))
    throw Error(ErrorCode::kInvalidArgument, "unknown expansion style '" + *expansion_style + "'");
  auto parsed = store::CodeFilter::parse(filter.empty() ? "all" : filter);

  CodeSetResult result;
  result.code_set = store_->create_code_set(term->id, name, parsed, expansion_style);
  if (!expansion_style) return result;

  ExpansionSummary summary;
  extract::Extractor extractor(*store_, gateway(), *embeddings_, settings_.expansion_styles);
  llm::CostLedger ledger(settings_.pricing, settings_.budget);
  for (const auto& code : store_->code_set_members(result.code_set.id)) {
    if (!ledger.dispatch_allowed()) {
      summary.killed = true;
      break;
    }
    ++summary.requested;
    try {
      auto e = extractor.expand_string(code.main_text(), *expansion_style, ledger);
      e.from_cache ? ++summary.cached : ++summary.generated;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kExpansionError) throw;
      ++summary.failed;
    }
  }
  summary.killed = summary.killed || ledger.snapshot().killed;
  result.expansions = summary;
  return result;
}

std::shared_ptr<std::mutex> Workspace::code_set_lock(store::Id id) {
  std::lock_guard lock(run_locks_mu_);
  auto& slot = run_locks_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

extract::RunReport Workspace::run(const extract::RunConfig& config_in,
                                  const extract::ProgressCallback& progress) {
  auto config = config_in;
  if (!config.pricing) config.pricing = settings_.pricing;
  if (!config.budget) config.budget = settings_.budget;
  auto code_set = code_set_by_name(config.code_set);

  auto lock = code_set_lock(code_set.id);
  std::lock_guard guard(*lock);
  extract::Extractor extractor(*store_, gateway(), *embeddings_,
                               merged_styles(config.expansion_styles));
  return extractor.run_population(code_set.id, config, progress);
}

store::CodeSet Workspace::code_set_by_name(const std::string& name) {
  auto cs = store_->find_code_set(name);
  if (!cs) throw Error(ErrorCode::kNotFound, "no code set named '" + name + "'");
  return *cs;
}

match::MatchResult Workspace::match(const MatchRequest& request) {
  auto cs = code_set_by_name(request.code_set);
  return matcher_->match_string_to_codes(
      {request.x, cs.id, request.selection, request.z, request.n});
}

match::BatchResult Workspace::batch_match(const BatchRequest& request) {
  auto cs = code_set_by_name(request.code_set);
  return matcher_->batch_match(request.run_id,
                               {cs.id, request.selection, request.z, request.n});
}

store::CustomTable Workspace::materialize(const std::string& name, const std::string& query) {
  return store_->materialize_custom_table(name, query);
}

}  // namespace termgraph::service
