#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "termgraph/llm/cost_ledger.hpp"
#include "termgraph/llm/prompt.hpp"
#include "termgraph/llm/schema.hpp"
#include "termgraph/store/types.hpp"

namespace termgraph::extract {

enum class AreYouSureMode { kNone, kVote, kAverage, kSum, kBooleanVote };

std::string_view are_you_sure_mode_name(AreYouSureMode mode);
AreYouSureMode parse_are_you_sure_mode(std::string_view name);

struct AreYouSureConfig {
  AreYouSureMode mode = AreYouSureMode::kNone;
  // Total samples including the first; ignored when mode is none.
  int repeats = 3;

  int samples() const { return mode == AreYouSureMode::kNone ? 1 : repeats; }
};

enum class BeceptivityMethod { kNone, kInline, kRequery, kDbLookup };

std::string_view beceptivity_method_name(BeceptivityMethod method);
BeceptivityMethod parse_beceptivity_method(std::string_view name);

struct BeceptivityConfig {
  BeceptivityMethod method = BeceptivityMethod::kNone;
  double min_required = 6;
  double scale_max = 10;
  int max_refinement_depth = 2;
  // Hierarchy consulted by db_lookup.
  std::string hierarchy;
};

// One relationship type. The schema holds exactly one persistable element
// (the answer) plus any number of no_write elements.
struct RelationshipSpec {
  std::string id;
  std::string predicate;
  llm::PromptTemplate prompt;
  llm::ResponseSchema schema;
  AreYouSureConfig are_you_sure;
  BeceptivityConfig beceptivity;
  std::vector<std::string> object_expansion_styles;

  const llm::ResponseElement& answer() const;
  store::ObjectKind object_kind() const;
  store::Finalization finalization() const;
};

// Validates a spec and throws kConfigError naming the spec on a violation.
void validate_spec(const RelationshipSpec& spec);

// Specs asked together in one prompt. All share the template; element names
// are unique across the group.
struct PromptGroup {
  std::string id;
  std::vector<RelationshipSpec> specs;

  const llm::PromptTemplate& prompt() const { return specs.front().prompt; }
  // Concatenation of every spec's elements in order.
  llm::ResponseSchema combined_schema() const;
  int samples() const;
};

// Instructions per expansion style name.
using ExpansionStyles = std::map<std::string, std::string>;
const ExpansionStyles& default_expansion_styles();

struct RunConfig {
  std::string code_set;
  std::vector<PromptGroup> groups;
  // Unset fields fall back to the service settings.
  std::optional<llm::Pricing> pricing;
  std::optional<llm::Money> budget;
  int workers = 1;
  ExpansionStyles expansion_styles = default_expansion_styles();
};

// Declarative run configuration (JSON). Relationship entries sharing a
// "group" value are asked in one prompt and must use the same template.
// Throws kConfigError with a description of the offending field.
RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace termgraph::extract
