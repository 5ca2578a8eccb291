#include "termgraph/llm/response.hpp"

#include <fmt/format.h>

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::llm {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kBeceptivityTag = "{beceptivity=";

std::string strip_code_fence(std::string_view raw) {
  auto s = text::trim(raw);
  if (s.substr(0, 3) == "```") {
    auto first_newline = s.find('\n');
    s = first_newline == std::string_view::npos ? std::string_view{} : s.substr(first_newline + 1);
    auto fence = s.rfind("```");
    if (fence != std::string_view::npos) s = s.substr(0, fence);
  }
  return std::string(text::trim(s));
}

// "item {beceptivity=7}" -> ("item", 7)
ResponseItem split_delimited_item(std::string_view raw_item) {
  ResponseItem item;
  auto s = text::trim(raw_item);
  auto tag = s.rfind(kBeceptivityTag);
  if (tag != std::string_view::npos && s.back() == '}') {
    auto number = s.substr(tag + kBeceptivityTag.size(),
                           s.size() - tag - kBeceptivityTag.size() - 1);
    item.beceptivity = text::parse_number(number);
    item.beceptivity_invalid = !item.beceptivity.has_value();
    s = text::trim(s.substr(0, tag));
  }
  item.text = std::string(s);
  return item;
}

std::string strip_bullet(std::string_view s) {
  s = text::trim(s);
  if (s.size() >= 2 && (s[0] == '-' || s[0] == '*') && s[1] == ' ') s.remove_prefix(2);
  return std::string(text::trim(s));
}

std::vector<ResponseItem> delimited_items(std::string_view value, bool multi) {
  std::vector<ResponseItem> items;
  if (!multi) {
    auto item = split_delimited_item(value);
    if (!item.text.empty()) items.push_back(std::move(item));
    return items;
  }
  std::string normalized(value);
  for (auto& c : normalized)
    if (c == '\n') c = '|';
  for (const auto& piece : text::split(normalized, '|')) {
    auto item = split_delimited_item(strip_bullet(piece));
    if (!item.text.empty()) items.push_back(std::move(item));
  }
  return items;
}

std::optional<ResponseItem> json_item(const json& value) {
  ResponseItem item;
  if (value.is_string()) {
    item.text = value.get<std::string>();
  } else if (value.is_number()) {
    item.text = text::format_number(value.get<double>());
  } else if (value.is_boolean()) {
    item.text = value.get<bool>() ? "1" : "0";
  } else if (value.is_object()) {
    auto v = value.find("value");
    if (v == value.end()) return std::nullopt;
    auto inner = json_item(*v);
    if (!inner) return std::nullopt;
    item.text = inner->text;
    auto b = value.find("beceptivity");
    if (b != value.end()) {
      if (b->is_number()) {
        item.beceptivity = b->get<double>();
      } else if (b->is_string()) {
        item.beceptivity = text::parse_number(b->get<std::string>());
      }
      item.beceptivity_invalid = !item.beceptivity.has_value();
    }
  } else {
    return std::nullopt;
  }
  item.text = std::string(text::trim(item.text));
  if (item.text.empty()) return std::nullopt;
  return item;
}

const json* find_key(const json& object, const std::string& name) {
  auto it = object.find(name);
  if (it != object.end()) return &*it;
  auto wanted = text::to_lower(name);
  for (auto i = object.begin(); i != object.end(); ++i)
    if (text::to_lower(i.key()) == wanted) return &i.value();
  return nullptr;
}

// Maps a model answer such as "b", "(b)", "b." or "b: Fracture of femur" to
// the dictionary value. Falls back to an exact match on the value text.
std::optional<std::string> map_dictionary(const ResponseDictionary& dict, std::string_view answer) {
  std::string_view s = text::trim(answer);
  auto strip = [](std::string_view v) {
    v = text::trim(v);
    while (!v.empty() && std::string_view("\"'(*[").find(v.front()) != std::string_view::npos)
      v.remove_prefix(1);
    while (!v.empty() && std::string_view("\"').*]").find(v.back()) != std::string_view::npos)
      v.remove_suffix(1);
    return text::trim(v);
  };
  if (auto v = dict.value_for(strip(s))) return v;
  auto colon = s.find(':');
  if (colon != std::string_view::npos) {
    if (auto v = dict.value_for(strip(s.substr(0, colon)))) return v;
    if (auto k = dict.key_for(strip(s.substr(colon + 1)))) return dict.value_for(*k);
  }
  if (auto k = dict.key_for(strip(s))) return dict.value_for(*k);
  return std::nullopt;
}

void normalize(ElementResult& result, const ResponseElement& element, ParseMode mode,
               std::string_view raw) {
  if (result.items.empty()) {
    result.status = ElementStatus::kMissing;
    return;
  }
  if (!element.multi_response && result.items.size() > 1) {
    result.status = ElementStatus::kInvalidValue;
    result.detail = "expected a single value";
  }
  for (auto& item : result.items) {
    if (result.status != ElementStatus::kOk && result.status != ElementStatus::kMissing) break;
    if (element.dictionary) {
      auto mapped = map_dictionary(*element.dictionary, item.text);
      if (!mapped) {
        result.status = ElementStatus::kKeyUnmapped;
        result.detail = std::string(text::trim(item.text));
        break;
      }
      item.text = *mapped;
      continue;
    }
    switch (element.kind) {
      case ValueKind::kNumeric: {
        auto n = text::parse_number(item.text);
        if (!n) {
          result.status = ElementStatus::kInvalidValue;
          result.detail = item.text;
        } else {
          item.text = text::format_number(*n);
        }
        break;
      }
      case ValueKind::kBooleanLike: {
        auto v = text::to_lower(text::trim(item.text));
        if (v == "1" || v == "true" || v == "yes") {
          item.text = "1";
        } else if (v == "0" || v == "false" || v == "no") {
          item.text = "0";
        } else {
          result.status = ElementStatus::kInvalidValue;
          result.detail = item.text;
        }
        break;
      }
      case ValueKind::kCategorical:
      case ValueKind::kFreeText: break;
    }
  }
  if (result.status == ElementStatus::kMissing) result.status = ElementStatus::kOk;
  if (mode == ParseMode::kStrict) {
    if (result.status == ElementStatus::kKeyUnmapped) throw KeyUnmapped(result.detail);
    if (result.status == ElementStatus::kInvalidValue)
      throw ParseError("element '" + result.name + "': invalid value '" + result.detail + "'",
                       std::string(raw));
  }
}

ParsedResponse parse_structured(std::string_view raw, const ResponseSchema& schema,
                                ParseMode mode) {
  std::string body = strip_code_fence(raw);
  auto open = body.find('{');
  auto close = body.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ParseError("response contains no JSON object", std::string(raw));
  json payload = json::parse(body.begin() + static_cast<std::ptrdiff_t>(open),
                             body.begin() + static_cast<std::ptrdiff_t>(close) + 1, nullptr,
                             false);
  if (payload.is_discarded() || !payload.is_object())
    throw ParseError("response JSON is malformed", std::string(raw));

  ParsedResponse parsed;
  for (const auto& element : schema.elements()) {
    ElementResult result;
    result.name = element.name;
    result.persistable = !element.no_write;
    if (const json* value = find_key(payload, element.name); value && !value->is_null()) {
      if (value->is_array()) {
        for (const auto& entry : *value)
          if (auto item = json_item(entry)) result.items.push_back(std::move(*item));
      } else if (value->is_string() && element.multi_response) {
        result.items = delimited_items(value->get<std::string>(), true);
      } else if (auto item = json_item(*value)) {
        result.items.push_back(std::move(*item));
      }
    }
    normalize(result, element, mode, raw);
    parsed.elements.push_back(std::move(result));
  }
  return parsed;
}

ParsedResponse parse_delimited(std::string_view raw, const ResponseSchema& schema,
                               ParseMode mode) {
  std::string body = strip_code_fence(raw);
  const auto& elements = schema.elements();
  std::vector<std::optional<std::string>> values(elements.size());

  auto element_prefix = [&](std::string_view line) -> std::optional<std::size_t> {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto name = text::to_lower(text::trim(line.substr(0, colon)));
    for (std::size_t i = 0; i < elements.size(); ++i)
      if (text::to_lower(elements[i].name) == name) return i;
    return std::nullopt;
  };

  if (elements.size() == 1) {
    std::string_view s = body;
    if (auto idx = element_prefix(s)) s = s.substr(s.find(':') + 1);
    values[0] = std::string(text::trim(s));
  } else {
    std::optional<std::size_t> current;
    bool any = false;
    for (const auto& line : text::split(body, '\n')) {
      if (auto idx = element_prefix(line)) {
        current = idx;
        any = true;
        values[*idx] = std::string(text::trim(std::string_view(line).substr(line.find(':') + 1)));
      } else if (current && !text::trim(line).empty()) {
        *values[*current] += "\n" + std::string(text::trim(line));
      }
    }
    if (!any) throw ParseError("response has none of the expected key lines", std::string(raw));
  }

  ParsedResponse parsed;
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const auto& element = elements[i];
    ElementResult result;
    result.name = element.name;
    result.persistable = !element.no_write;
    if (values[i]) {
      bool keep_whole = !element.multi_response && element.kind == ValueKind::kFreeText;
      if (keep_whole) {
        auto item = split_delimited_item(*values[i]);
        if (!item.text.empty()) result.items.push_back(std::move(item));
      } else {
        result.items = delimited_items(*values[i], element.multi_response);
      }
    }
    normalize(result, element, mode, raw);
    parsed.elements.push_back(std::move(result));
  }
  return parsed;
}

std::string payload_text(const ResponseItem& item, const ResponseElement& element) {
  if (element.dictionary) {
    if (auto key = element.dictionary->key_for(item.text)) return *key;
  }
  return item.text;
}

ordered_json payload_json_item(const ResponseItem& item, const ResponseElement& element) {
  ordered_json scalar;
  if (element.kind == ValueKind::kNumeric || element.kind == ValueKind::kBooleanLike) {
    auto n = text::parse_number(item.text);
    scalar = n ? ordered_json(*n) : ordered_json(item.text);
  } else {
    scalar = payload_text(item, element);
  }
  if (!item.beceptivity) return scalar;
  ordered_json obj;
  obj["value"] = scalar;
  obj["beceptivity"] = *item.beceptivity;
  return obj;
}

std::string delimited_item_text(const ResponseItem& item, const ResponseElement& element) {
  std::string out = payload_text(item, element);
  if (item.beceptivity)
    out += fmt::format(" {}{}}}", kBeceptivityTag, text::format_number(*item.beceptivity));
  return out;
}

}  // namespace

const ElementResult* ParsedResponse::find(std::string_view name) const {
  auto wanted = text::to_lower(name);
  for (const auto& e : elements)
    if (text::to_lower(e.name) == wanted) return &e;
  return nullptr;
}

ParsedResponse parse_response(std::string_view raw, const ResponseSchema& schema,
                              const ProviderCapabilities& caps, ParseMode mode) {
  if (text::trim(raw).empty()) throw ParseError("response is empty", std::string(raw));
  return caps.structured_output ? parse_structured(raw, schema, mode)
                                : parse_delimited(raw, schema, mode);
}

std::string render_payload(const ParsedResponse& values, const ResponseSchema& schema,
                           const ProviderCapabilities& caps) {
  if (caps.structured_output) {
    ordered_json payload = ordered_json::object();
    for (const auto& element : schema.elements()) {
      const auto* result = values.find(element.name);
      if (!result || result->items.empty()) continue;
      if (element.multi_response) {
        ordered_json list = ordered_json::array();
        for (const auto& item : result->items) list.push_back(payload_json_item(item, element));
        payload[element.name] = std::move(list);
      } else {
        payload[element.name] = payload_json_item(result->items.front(), element);
      }
    }
    return payload.dump();
  }

  const auto& elements = schema.elements();
  std::vector<std::string> lines;
  for (const auto& element : elements) {
    const auto* result = values.find(element.name);
    if (!result || result->items.empty()) continue;
    std::vector<std::string> items;
    for (const auto& item : result->items) items.push_back(delimited_item_text(item, element));
    std::string joined = text::join(items, "|");
    lines.push_back(elements.size() == 1 ? joined : element.name + ": " + joined);
  }
  return text::join(lines, "\n");
}

}  // namespace termgraph::llm
