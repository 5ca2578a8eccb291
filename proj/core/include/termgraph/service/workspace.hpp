#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "termgraph/embed/embedder.hpp"
#include "termgraph/embed/embedding_service.hpp"
#include "termgraph/extract/engine.hpp"
#include "termgraph/llm/provider.hpp"
#include "termgraph/match/matcher.hpp"
#include "termgraph/service/settings.hpp"
#include "termgraph/store/import_format.hpp"
#include "termgraph/store/store.hpp"

namespace termgraph::service {

struct ExpansionSummary {
  std::size_t requested = 0;
  std::size_t generated = 0;
  std::size_t cached = 0;
  std::size_t failed = 0;
  bool killed = false;
};

struct CodeSetResult {
  store::CodeSet code_set;
  std::optional<ExpansionSummary> expansions;
};

struct MatchRequest {
  std::string x;
  std::string code_set;  // name
  match::VectorSelection selection;
  double z = 2.0;
  int n = match::kDefaultTopN;
};

struct BatchRequest {
  store::Id run_id = 0;
  std::string code_set;  // name
  match::VectorSelection selection;
  double z = 2.0;
  int n = match::kDefaultTopN;
};

// Every workflow the CLI and the HTTP service expose, over one store. Both
// front ends call these methods and nothing else, so identical inputs leave
// identical store contents.
//
// The provider is created on first use, so workflows that never call a model
// do not need a transcript or endpoint.
class Workspace {
 public:
  explicit Workspace(Settings settings);
  // For tests: inject the provider and/or embedder (null means build from
  // settings).
  Workspace(Settings settings, std::unique_ptr<llm::Provider> provider,
            std::unique_ptr<embed::Embedder> embedder);
  ~Workspace();

  const Settings& settings() const noexcept { return settings_; }
  store::Store& store() noexcept { return *store_; }
  embed::EmbeddingService& embeddings() noexcept { return *embeddings_; }
  llm::Gateway& gateway();

  // Imports rows, then embeds every distinct string and each code's summary
  // vector. Parser rejections are merged into the report.
  store::ImportReport import_terminology(const std::string& name, const store::ParsedRows& parsed);
  void import_hierarchy(const std::string& name, const std::vector<store::HierarchyEdge>& edges);

  // With an expansion style, every member's main string is expanded under
  // the settings pricing and budget.
  CodeSetResult create_code_set(const std::string& terminology, const std::string& name,
                                const std::string& filter,
                                const std::optional<std::string>& expansion_style);

  // At most one run per code set at a time; later callers wait.
  extract::RunReport run(const extract::RunConfig& config,
                         const extract::ProgressCallback& progress = {});

  match::MatchResult match(const MatchRequest& request);
  match::BatchResult batch_match(const BatchRequest& request);

  store::CustomTable materialize(const std::string& name, const std::string& query);

  store::CodeSet code_set_by_name(const std::string& name);

 private:
  std::shared_ptr<std::mutex> code_set_lock(store::Id id);
  extract::ExpansionStyles merged_styles(const extract::ExpansionStyles& extra) const;

  Settings settings_;
  std::unique_ptr<store::Store> store_;
  std::unique_ptr<embed::Embedder> embedder_;
  std::unique_ptr<embed::EmbeddingService> embeddings_;
  std::unique_ptr<match::Matcher> matcher_;

  std::mutex provider_mu_;
  std::unique_ptr<llm::Provider> inner_provider_;  // wrapped when recording
  std::unique_ptr<llm::Provider> provider_;
  std::unique_ptr<llm::Gateway> gateway_;

  std::mutex run_locks_mu_;
  std::map<store::Id, std::shared_ptr<std::mutex>> run_locks_;
};

// Builds the provider described by the settings.
std::unique_ptr<llm::Provider> make_provider(const ProviderSettings& settings,
                                             std::unique_ptr<llm::Provider>& inner);
std::unique_ptr<embed::Embedder> make_embedder(const EmbedderSettings& settings);

}  // namespace termgraph::service
