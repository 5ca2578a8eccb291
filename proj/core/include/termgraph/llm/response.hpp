#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "termgraph/llm/schema.hpp"

namespace termgraph::llm {

struct ResponseItem {
  std::string text;
  std::optional<double> beceptivity;
  // Set when a beceptivity annotation was present but not a number.
  bool beceptivity_invalid = false;

  bool operator==(const ResponseItem&) const = default;
};

enum class ElementStatus { kOk, kMissing, kKeyUnmapped, kInvalidValue };

struct ElementResult {
  std::string name;
  ElementStatus status = ElementStatus::kMissing;
  // Dictionary-mapped, normalized values. Single-valued elements hold one item.
  std::vector<ResponseItem> items;
  bool persistable = true;
  // Unmapped key or the rejected value, for reporting.
  std::string detail;
};

struct ParsedResponse {
  std::vector<ElementResult> elements;

  const ElementResult* find(std::string_view name) const;
};

enum class ParseMode {
  // Unmapped dictionary keys throw KeyUnmapped; invalid values throw ParseError.
  kStrict,
  // Per-element problems are recorded in ElementResult::status.
  kLenient,
};

// Throws ParseError (raw preserved) when the payload as a whole cannot be read.
ParsedResponse parse_response(std::string_view raw, const ResponseSchema& schema,
                              const ProviderCapabilities& caps,
                              ParseMode mode = ParseMode::kStrict);

// Writes a well-formed payload for the given element values, the inverse of
// parse_response. Dictionary values are written as their keys. Used for
// fixtures and by the recording tools.
std::string render_payload(const ParsedResponse& values, const ResponseSchema& schema,
                           const ProviderCapabilities& caps);

}  // namespace termgraph::llm
