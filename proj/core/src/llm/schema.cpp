#include "termgraph/llm/schema.hpp"

#include <cctype>
#include <set>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::llm {

namespace {
constexpr std::size_t kMaxKeyLength = 16;

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidArgument, message);
}

bool is_short_term(std::string_view key) {
  if (key.empty() || key.size() > kMaxKeyLength) return false;
  if (!std::isalpha(static_cast<unsigned char>(key.front()))) return false;
  for (char c : key) {
    auto u = static_cast<unsigned char>(c);
    if (!std::isalpha(u) && c != '_' && c != '-') return false;
  }
  return true;
}
}  // namespace

std::string_view value_kind_name(ValueKind kind) {
  switch (kind) {
    case ValueKind::kFreeText: return "free_text";
    case ValueKind::kCategorical: return "categorical";
    case ValueKind::kNumeric: return "numeric";
    case ValueKind::kBooleanLike: return "boolean_like";
  }
  return "free_text";
}

ValueKind parse_value_kind(std::string_view name) {
  if (name == "free_text") return ValueKind::kFreeText;
  if (name == "categorical") return ValueKind::kCategorical;
  if (name == "numeric") return ValueKind::kNumeric;
  if (name == "boolean_like") return ValueKind::kBooleanLike;
  invalid("unknown value kind '" + std::string(name) + "'");
}

ResponseDictionary ResponseDictionary::create(std::vector<DictionaryEntry> entries) {
  if (entries.empty()) invalid("response dictionary needs at least one entry");
  std::set<std::string> seen;
  for (auto& entry : entries) {
    entry.key = std::string(text::trim(entry.key));
    if (!is_short_term(entry.key))
      invalid("dictionary key '" + entry.key +
              "' must be a letter or short term (letters, '_' or '-', at most 16 chars)");
    if (text::trim(entry.value).empty()) invalid("dictionary value for '" + entry.key + "' is empty");
    if (!seen.insert(text::to_lower(entry.key)).second)
      invalid("duplicate dictionary key '" + entry.key + "'");
  }
  ResponseDictionary dict;
  dict.entries_ = std::move(entries);
  return dict;
}

bool ResponseDictionary::all_single_letters() const {
  for (const auto& entry : entries_)
    if (entry.key.size() != 1) return false;
  return true;
}

std::optional<std::string> ResponseDictionary::value_for(std::string_view key) const {
  auto wanted = text::to_lower(text::trim(key));
  for (const auto& entry : entries_)
    if (text::to_lower(entry.key) == wanted) return entry.value;
  return std::nullopt;
}

std::optional<std::string> ResponseDictionary::key_for(std::string_view value) const {
  auto wanted = text::to_lower(text::trim(value));
  for (const auto& entry : entries_)
    if (text::to_lower(entry.value) == wanted) return entry.key;
  return std::nullopt;
}

ResponseSchema ResponseSchema::create(std::vector<ResponseElement> elements) {
  if (elements.empty()) invalid("response schema needs at least one element");
  std::set<std::string> names;
  for (const auto& e : elements) {
    if (text::trim(e.name).empty()) invalid("response element name is empty");
    if (e.name.find_first_of(":|\n\"") != std::string::npos)
      invalid("response element name '" + e.name + "' contains a reserved character");
    if (!names.insert(text::to_lower(e.name)).second)
      invalid("duplicate response element '" + e.name + "'");
    if (e.dictionary) {
      if (e.multi_response)
        invalid("element '" + e.name + "': multi_response must be false with a dictionary");
      if (e.kind != ValueKind::kCategorical)
        invalid("element '" + e.name + "': dictionaries require a categorical element");
    }
    if (e.beceptivity_requested) {
      if (e.kind != ValueKind::kFreeText)
        invalid("element '" + e.name + "': beceptivity applies to free text only");
      if (!(e.beceptivity_scale_max > 0))
        invalid("element '" + e.name + "': beceptivity scale maximum must be positive");
    }
  }
  ResponseSchema schema;
  schema.elements_ = std::move(elements);
  return schema;
}

const ResponseElement* ResponseSchema::find(std::string_view name) const {
  auto wanted = text::to_lower(name);
  for (const auto& e : elements_)
    if (text::to_lower(e.name) == wanted) return &e;
  return nullptr;
}

std::vector<const ResponseElement*> ResponseSchema::persistable() const {
  std::vector<const ResponseElement*> out;
  for (const auto& e : elements_)
    if (!e.no_write) out.push_back(&e);
  return out;
}

}  // namespace termgraph::llm
