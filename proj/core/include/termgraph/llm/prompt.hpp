#pragma once

#include <string>
#include <string_view>

#include "termgraph/llm/schema.hpp"

namespace termgraph::llm {

inline constexpr std::string_view kConceptPlaceholder = "<<<concept>>>";

// A prompt body with exactly one "<<<concept>>>" slot.
class PromptTemplate {
 public:
  // Throws kTemplateError unless the placeholder occurs exactly once.
  static PromptTemplate create(std::string body);

  const std::string& body() const noexcept { return body_; }
  std::string render(std::string_view concept_text) const;

  // True when at most a short tail (punctuation, a few words) follows the
  // placeholder, so successive prompts share a long common prefix.
  bool placeholder_near_end() const;

 private:
  std::string body_;
  std::size_t slot_ = 0;
};

std::string build_format_instructions(const ResponseSchema& schema,
                                      const ProviderCapabilities& caps);

// Format instructions first, then the template body with the concept
// substituted. Everything before the concept is identical across concepts.
std::string render_prompt(const PromptTemplate& tmpl, std::string_view concept_text,
                          const ResponseSchema& schema, const ProviderCapabilities& caps);

}  // namespace termgraph::llm
