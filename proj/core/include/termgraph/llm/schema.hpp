#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace termgraph::llm {

enum class ValueKind { kFreeText, kCategorical, kNumeric, kBooleanLike };

std::string_view value_kind_name(ValueKind kind);
ValueKind parse_value_kind(std::string_view name);

struct DictionaryEntry {
  std::string key;
  std::string value;
};

// Short non-numeric keys the model answers with, each standing for a
// categorical value. Keys are matched case-insensitively.
class ResponseDictionary {
 public:
  // Throws kInvalidArgument on empty, duplicate, numeric, or overlong keys.
  static ResponseDictionary create(std::vector<DictionaryEntry> entries);

  const std::vector<DictionaryEntry>& entries() const noexcept { return entries_; }
  bool all_single_letters() const;

  std::optional<std::string> value_for(std::string_view key) const;
  std::optional<std::string> key_for(std::string_view value) const;

 private:
  std::vector<DictionaryEntry> entries_;
};

struct ResponseElement {
  std::string name;
  ValueKind kind = ValueKind::kFreeText;
  bool multi_response = false;
  bool no_write = false;
  std::optional<ResponseDictionary> dictionary;
  bool beceptivity_requested = false;
  double beceptivity_scale_max = 10.0;
  // Optional guidance rendered next to the element in the format instructions.
  std::string description;
};

class ResponseSchema {
 public:
  ResponseSchema() = default;

  // Validates names (non-empty, unique) and per-element constraints: no
  // multi_response together with a dictionary, dictionaries only on
  // categorical elements, beceptivity only on free text.
  static ResponseSchema create(std::vector<ResponseElement> elements);

  const std::vector<ResponseElement>& elements() const noexcept { return elements_; }
  const ResponseElement* find(std::string_view name) const;
  std::vector<const ResponseElement*> persistable() const;

 private:
  std::vector<ResponseElement> elements_;
};

struct ProviderCapabilities {
  bool structured_output = true;
};

}  // namespace termgraph::llm
