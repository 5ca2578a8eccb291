#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "termgraph/embed/embedding_service.hpp"
#include "termgraph/extract/spec.hpp"
#include "termgraph/llm/cost_ledger.hpp"
#include "termgraph/llm/provider.hpp"
#include "termgraph/llm/response.hpp"
#include "termgraph/store/store.hpp"

namespace termgraph::extract {

// Prompts issued besides the relationship prompts themselves. Exposed so
// fixtures can be recorded against the exact text the engine sends.
llm::ResponseSchema requery_schema(double scale_max);
std::string requery_prompt(std::string_view text, double scale_max,
                           const llm::ProviderCapabilities& caps);

// The answer element as a multi-response list (with inline beceptivity when
// the spec uses it).
llm::ResponseSchema refinement_schema(const RelationshipSpec& spec);
// Names the too-general item, then repeats the original question for the
// concept, so the replacements are specific to that concept.
std::string refinement_prompt(const RelationshipSpec& spec, std::string_view item,
                              std::string_view concept_text, const llm::ProviderCapabilities& caps);

llm::ResponseSchema expansion_schema();
std::string expansion_prompt(std::string_view text, std::string_view style_instruction,
                             const llm::ProviderCapabilities& caps);

struct BeceptivityAssessment {
  std::string text;
  double value = 0;
  BeceptivityMethod source = BeceptivityMethod::kNone;
  bool from_cache = false;
};

struct ExpansionString {
  std::string source_text;
  std::string style;
  std::vector<std::string> generated_texts;
  std::string model_id;
  bool from_cache = false;
};

// A replacement that passed the beceptivity threshold.
struct AcceptedReplacement {
  std::string text;
  std::string replaced_parent;
  int depth = 1;
};

struct RefinementOutcome {
  // False when the item already met the threshold; nothing was asked.
  bool applied = false;
  std::vector<AcceptedReplacement> accepted;
  std::vector<store::RefinementRecord> lineage;
  std::vector<store::AssessmentRecord> assessments;
  std::size_t dropped = 0;
  std::size_t assessment_errors = 0;
  std::size_t provider_failures = 0;
  bool killed = false;
};

struct RunReport {
  store::Id run_id = 0;
  store::RunStatus status = store::RunStatus::kPending;
  std::size_t concepts_total = 0;
  std::size_t concepts_processed = 0;
  std::size_t concepts_skipped = 0;
  std::size_t triples_written = 0;
  std::size_t items_refined = 0;
  std::size_t replacements_written = 0;
  std::size_t items_dropped = 0;
  std::size_t items_failed = 0;
  std::size_t items_killed = 0;
  std::size_t key_unmapped = 0;
  std::size_t invalid_values = 0;
  std::size_t missing_values = 0;
  std::size_t parse_failures = 0;
  std::size_t assessment_errors = 0;
  std::size_t expansion_failures = 0;
  long provider_calls = 0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  llm::Money cost;
  std::optional<llm::Money> limit;
  // Cost of the most expensive single response seen during the run.
  llm::Money max_response_cost;
  bool kill_triggered = false;
  // Set when the run failed; error_code is an ErrorCode name.
  std::string error_code;
  std::string error;

  std::string to_json() const;
};

using ProgressCallback = std::function<void(std::size_t done, std::size_t total)>;

// Runs relationship prompts over code sets and writes the resulting triples.
class Extractor {
 public:
  Extractor(store::Store& store, llm::Gateway& gateway, embed::EmbeddingService& embeddings,
            ExpansionStyles styles = default_expansion_styles());

  // Throws kAssessmentError when no usable value can be obtained (missing or
  // out-of-range inline value, unparsable re-query answer, term absent from
  // the hierarchy, provider failure or budget kill). `inline_item` is the
  // response item carrying the inline annotation.
  BeceptivityAssessment assess_beceptivity(const std::string& text,
                                           const std::optional<llm::ResponseItem>& inline_item,
                                           const BeceptivityConfig& config, llm::CostLedger& ledger);

  // Replaces an under-beceptive item with more specific ones, recursing on
  // replacements that are still too general up to max_refinement_depth.
  // Returns without asking anything when item_value meets the threshold.
  RefinementOutcome refine_underbeceptive(const std::string& item, std::optional<double> item_value,
                                          const std::string& concept_text,
                                          const RelationshipSpec& spec, llm::CostLedger& ledger);

  // Cached per (text, style, model). Generated texts are embedded and their
  // mean CLS vector stored under expansion_owner(style, text). Throws
  // kInvalidArgument for empty text or an unknown style and kExpansionError
  // when the provider fails or returns nothing usable.
  ExpansionString expand_string(const std::string& text, const std::string& style,
                                llm::CostLedger& ledger);

  // Processes every member of the code set. Provider failures mark the item
  // failed and the run continues; a budget kill stops new requests, keeps
  // what was written and ends the run as killed_budget.
  RunReport run_population(store::Id code_set_id, const RunConfig& config,
                           const ProgressCallback& progress = {});

  const ExpansionStyles& styles() const noexcept { return styles_; }

 private:
  struct ConceptResult;
  struct SpecState;

  void process_group(const store::Code& concept_code, const PromptGroup& group,
                     const llm::ResponseSchema& schema, llm::CostLedger& ledger, ConceptResult& out);
  void finalize_spec(const store::Code& concept_code, const RelationshipSpec& spec,
                     const std::vector<std::optional<llm::ParsedResponse>>& samples,
                     llm::CostLedger& ledger, ConceptResult& out);
  void refine_into(const std::string& item, const std::string& concept_text,
                   const RelationshipSpec& spec, int depth, SpecState& state,
                   llm::CostLedger& ledger, RefinementOutcome& out);
  std::shared_ptr<std::mutex> key_lock(const std::string& key);
  void note_response_cost(const llm::CostLedger& ledger, const llm::TokenUsage& usage);

  store::Store& store_;
  llm::Gateway& gateway_;
  embed::EmbeddingService& embeddings_;
  ExpansionStyles styles_;

  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::mutex cost_mu_;
  // Most expensive single response per active run ledger.
  std::map<const llm::CostLedger*, llm::Money> max_response_cost_;
};

}  // namespace termgraph::extract
