#include "termgraph/llm/prompt.hpp"

#include <fmt/format.h>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::llm {

namespace {
constexpr std::size_t kNearEndChars = 80;

std::string scale_text(const ResponseElement& e) {
  return fmt::format("a number from 0 (most general or vague) to {} (most specific or detailed)",
                     text::format_number(e.beceptivity_scale_max));
}

std::string structured_shape(const ResponseElement& e) {
  std::string item;
  switch (e.kind) {
    case ValueKind::kNumeric: item = "a number"; break;
    case ValueKind::kBooleanLike: item = "0 or 1"; break;
    case ValueKind::kCategorical:
      item = e.dictionary ? "one of the option keys listed below, as a string" : "a string";
      break;
    case ValueKind::kFreeText: item = "a string"; break;
  }
  if (e.beceptivity_requested) {
    std::string obj = fmt::format(
        "an object {{\"value\": <string>, \"beceptivity\": <{}>}}", scale_text(e));
    return e.multi_response ? "a JSON array of such objects, one per item, each " + obj : obj;
  }
  if (e.multi_response) return "a JSON array with one entry per item, each entry " + item;
  return item;
}

std::string delimited_shape(const ResponseElement& e) {
  std::string item;
  switch (e.kind) {
    case ValueKind::kNumeric: item = "a number"; break;
    case ValueKind::kBooleanLike: item = "0 or 1"; break;
    case ValueKind::kCategorical:
      item = e.dictionary ? "one of the option keys listed below" : "text";
      break;
    case ValueKind::kFreeText: item = "text"; break;
  }
  std::string out = e.multi_response ? "pipe-delimited items, each " + item : item;
  if (e.beceptivity_requested)
    out += fmt::format("; after each item append {{beceptivity=N}} where N is {}", scale_text(e));
  return out;
}

void append_dictionary(std::string& out, const ResponseElement& e, bool name_element) {
  const auto& dict = *e.dictionary;
  const char* noun = dict.all_single_letters() ? "letter values" : "values";
  if (name_element)
    out += fmt::format("For \"{}\", answer only with one of the appropriate {} that follow:\n",
                       e.name, noun);
  else
    out += fmt::format("Answer only with one of the appropriate {} that follow:\n", noun);
  for (const auto& entry : dict.entries()) out += fmt::format("{}: {}\n", entry.key, entry.value);
}

void append_description(std::string& out, const ResponseElement& e) {
  if (!e.description.empty()) out += " " + e.description;
}
}  // namespace

PromptTemplate PromptTemplate::create(std::string body) {
  auto first = body.find(kConceptPlaceholder);
  if (first == std::string::npos)
    throw Error(ErrorCode::kTemplateError,
                "prompt template has no " + std::string(kConceptPlaceholder) + " placeholder");
  if (body.find(kConceptPlaceholder, first + 1) != std::string::npos)
    throw Error(ErrorCode::kTemplateError, "prompt template has more than one " +
                                               std::string(kConceptPlaceholder) + " placeholder");
  PromptTemplate t;
  t.body_ = std::move(body);
  t.slot_ = first;
  return t;
}

std::string PromptTemplate::render(std::string_view concept_text) const {
  std::string out;
  out.reserve(body_.size() + concept_text.size());
  out.append(body_, 0, slot_);
  out.append(concept_text);
  out.append(body_, slot_ + kConceptPlaceholder.size());
  return out;
}

bool PromptTemplate::placeholder_near_end() const {
  return body_.size() - (slot_ + kConceptPlaceholder.size()) <= kNearEndChars;
}

std::string build_format_instructions(const ResponseSchema& schema,
                                      const ProviderCapabilities& caps) {
  const auto& elements = schema.elements();
  std::string out;
  if (caps.structured_output) {
    out += "Format your entire response as a single JSON object with exactly these keys, in "
           "this order:\n";
    for (const auto& e : elements) {
      out += fmt::format("- \"{}\": {}.", e.name, structured_shape(e));
      append_description(out, e);
      out += "\n";
    }
    if (elements.size() > 1 && elements.front().no_write)
      out += fmt::format("Write \"{}\" first, before giving any answer.\n", elements.front().name);
    for (const auto& e : elements)
      if (e.dictionary) append_dictionary(out, e, true);
    out += "Do not write anything outside the JSON object.";
    return out;
  }

  if (elements.size() == 1) {
    const auto& e = elements.front();
    if (e.dictionary) {
      append_dictionary(out, e, false);
    } else if (e.multi_response) {
      out += "Respond with only a series of pipe-delimited text snippets, for example: "
             "first item|second item|third item.";
      if (e.beceptivity_requested)
        out += fmt::format(" After each item append {{beceptivity=N}} where N is {}.",
                           scale_text(e));
    } else {
      out += fmt::format("Respond with only {}.", delimited_shape(e));
    }
    append_description(out, e);
    if (out.back() == '\n') out.pop_back();
    return out;
  }

  out += "Respond with one line per key below, in this order, each formatted as key: value. "
         "Separate multiple items with the pipe character (|).\n";
  for (const auto& e : elements) {
    out += fmt::format("- {}: {}.", e.name, delimited_shape(e));
    append_description(out, e);
    out += "\n";
  }
  if (elements.front().no_write)
    out += fmt::format("Write the {} line first, before giving any answer.\n",
                       elements.front().name);
  for (const auto& e : elements)
    if (e.dictionary) append_dictionary(out, e, true);
  if (out.back() == '\n') out.pop_back();
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view concept_text,
                          const ResponseSchema& schema, const ProviderCapabilities& caps) {
  return build_format_instructions(schema, caps) + "\n\n" + tmpl.render(concept_text);
}

}  // namespace termgraph::llm
