#include "termgraph/extract/spec.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::extract {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

llm::Money parse_money(const ordered_json& j, const std::string& field) {
  try {
    if (j.is_string()) return llm::Money::parse(j.get<std::string>());
    if (j.is_number()) return llm::Money::parse(j.dump());
  } catch (const Error& e) {
    config_error(field + ": " + e.what());
  }
  config_error(field + " must be a decimal string or number");
}

void check_keys(const ordered_json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) config_error(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const std::exception&) {
    config_error(std::string("field '") + key + "' has the wrong type");
  }
}

llm::ResponseElement parse_element(const ordered_json& j) {
  if (!j.is_object()) config_error("response element must be an object");
  llm::ResponseElement e;
  e.name = get_or<std::string>(j, "name", "");
  check_keys(j, {"name", "kind", "multi_response", "no_write", "description", "dictionary"},
             "element '" + e.name + "'");
  e.kind = llm::parse_value_kind(get_or<std::string>(j, "kind", "free_text"));
  e.multi_response = get_or<bool>(j, "multi_response", false);
  e.no_write = get_or<bool>(j, "no_write", false);
  e.description = get_or<std::string>(j, "description", "");
  if (j.contains("dictionary") && !j["dictionary"].is_null()) {
    std::vector<llm::DictionaryEntry> entries;
    const auto& d = j["dictionary"];
    if (d.is_object()) {
      for (const auto& [key, value] : d.items()) entries.push_back({key, value.get<std::string>()});
    } else if (d.is_array()) {
      for (const auto& entry : d)
        entries.push_back({entry.at("key").get<std::string>(), entry.at("value").get<std::string>()});
    } else {
      config_error("element '" + e.name + "': dictionary must be an object or array");
    }
    e.dictionary = llm::ResponseDictionary::create(std::move(entries));
  }
  return e;
}

RelationshipSpec parse_relationship(const ordered_json& j) {
  if (!j.is_object()) config_error("relationship entry must be an object");
  RelationshipSpec spec;
  spec.predicate = get_or<std::string>(j, "predicate", "");
  spec.id = get_or<std::string>(j, "id", spec.predicate);
  check_keys(j, {"id", "predicate", "group", "template", "elements", "are_you_sure", "beceptivity",
                 "expansion_styles"},
             "relationship '" + spec.id + "'");
  const std::string where = "relationship '" + spec.id + "'";
  try {
    spec.prompt = llm::PromptTemplate::create(get_or<std::string>(j, "template", ""));

    if (j.contains("are_you_sure")) {
      const auto& a = j["are_you_sure"];
      check_keys(a, {"mode", "repeats"}, "relationship '" + spec.id + "' are_you_sure");
      spec.are_you_sure.mode = parse_are_you_sure_mode(get_or<std::string>(a, "mode", "none"));
      spec.are_you_sure.repeats = get_or<int>(a, "repeats", 3);
    }
    if (j.contains("beceptivity")) {
      const auto& b = j["beceptivity"];
      check_keys(b, {"method", "min_required", "scale_max", "max_refinement_depth", "hierarchy"},
                 "relationship '" + spec.id + "' beceptivity");
      auto& cfg = spec.beceptivity;
      cfg.method = parse_beceptivity_method(get_or<std::string>(b, "method", "none"));
      cfg.min_required = get_or<double>(b, "min_required", cfg.min_required);
      cfg.scale_max = get_or<double>(b, "scale_max", cfg.scale_max);
      cfg.max_refinement_depth = get_or<int>(b, "max_refinement_depth", cfg.max_refinement_depth);
      cfg.hierarchy = get_or<std::string>(b, "hierarchy", "");
    }
    spec.object_expansion_styles =
        get_or<std::vector<std::string>>(j, "expansion_styles", std::vector<std::string>{});

    if (!j.contains("elements") || !j["elements"].is_array())
      config_error(where + ": 'elements' must be an array");
    std::vector<llm::ResponseElement> elements;
    for (const auto& e : j["elements"]) elements.push_back(parse_element(e));
    // The answer element carries the inline beceptivity request and scale.
    for (auto& e : elements) {
      if (e.no_write) continue;
      e.beceptivity_scale_max = spec.beceptivity.scale_max;
      e.beceptivity_requested = spec.beceptivity.method == BeceptivityMethod::kInline;
    }
    spec.schema = llm::ResponseSchema::create(std::move(elements));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_error(where + ": " + e.what());
  }
  validate_spec(spec);
  return spec;
}

}  // namespace

std::string_view are_you_sure_mode_name(AreYouSureMode mode) {
  switch (mode) {
    case AreYouSureMode::kNone: return "none";
    case AreYouSureMode::kVote: return "vote";
    case AreYouSureMode::kAverage: return "average";
    case AreYouSureMode::kSum: return "sum";
    case AreYouSureMode::kBooleanVote: return "boolean_vote";
  }
  return "none";
}

AreYouSureMode parse_are_you_sure_mode(std::string_view name) {
  for (auto m : {AreYouSureMode::kNone, AreYouSureMode::kVote, AreYouSureMode::kAverage,
                 AreYouSureMode::kSum, AreYouSureMode::kBooleanVote})
    if (are_you_sure_mode_name(m) == name) return m;
  config_error("unknown are_you_sure mode '" + std::string(name) + "'");
}

std::string_view beceptivity_method_name(BeceptivityMethod method) {
  switch (method) {
    case BeceptivityMethod::kNone: return "none";
    case BeceptivityMethod::kInline: return "inline";
    case BeceptivityMethod::kRequery: return "requery";
    case BeceptivityMethod::kDbLookup: return "db_lookup";
  }
  return "none";
}

BeceptivityMethod parse_beceptivity_method(std::string_view name) {
  for (auto m : {BeceptivityMethod::kNone, BeceptivityMethod::kInline, BeceptivityMethod::kRequery,
                 BeceptivityMethod::kDbLookup})
    if (beceptivity_method_name(m) == name) return m;
  config_error("unknown beceptivity method '" + std::string(name) + "'");
}

const llm::ResponseElement& RelationshipSpec::answer() const {
  auto persistable = schema.persistable();
  if (persistable.size() != 1)
    config_error("relationship '" + id + "' needs exactly one persistable element");
  return *persistable.front();
}

store::ObjectKind RelationshipSpec::object_kind() const {
  switch (answer().kind) {
    case llm::ValueKind::kFreeText: return store::ObjectKind::kFreeText;
    case llm::ValueKind::kNumeric: return store::ObjectKind::kNumeric;
    case llm::ValueKind::kCategorical:
    case llm::ValueKind::kBooleanLike: return store::ObjectKind::kCategorical;
  }
  return store::ObjectKind::kFreeText;
}

store::Finalization RelationshipSpec::finalization() const {
  switch (are_you_sure.mode) {
    case AreYouSureMode::kNone: return store::Finalization::kSingle;
    case AreYouSureMode::kVote: return store::Finalization::kVote;
    case AreYouSureMode::kAverage: return store::Finalization::kAverage;
    case AreYouSureMode::kSum: return store::Finalization::kSum;
    case AreYouSureMode::kBooleanVote: return store::Finalization::kBooleanVote;
  }
  return store::Finalization::kSingle;
}

void validate_spec(const RelationshipSpec& spec) {
  const std::string where = "relationship '" + spec.id + "'";
  if (text::trim(spec.id).empty()) config_error("relationship id is empty");
  if (text::trim(spec.predicate).empty()) config_error(where + ": predicate is empty");
  if (spec.schema.elements().empty()) config_error(where + ": no response elements");
  if (spec.schema.persistable().size() != 1)
    config_error(where + ": needs exactly one persistable element, found " +
                 std::to_string(spec.schema.persistable().size()));
  const auto& answer = spec.answer();

  const auto& ays = spec.are_you_sure;
  if (ays.repeats < 1) config_error(where + ": are_you_sure repeats must be at least 1");
  switch (ays.mode) {
    case AreYouSureMode::kNone: break;
    case AreYouSureMode::kVote:
      if (answer.kind != llm::ValueKind::kCategorical && answer.kind != llm::ValueKind::kBooleanLike)
        config_error(where + ": vote requires a categorical or boolean_like answer");
      break;
    case AreYouSureMode::kBooleanVote:
      if (answer.kind != llm::ValueKind::kBooleanLike)
        config_error(where + ": boolean_vote requires a boolean_like answer");
      break;
    case AreYouSureMode::kAverage:
    case AreYouSureMode::kSum:
      if (answer.kind != llm::ValueKind::kNumeric)
        config_error(where + ": average and sum require a numeric answer");
      break;
  }
  if (ays.mode != AreYouSureMode::kNone && answer.multi_response)
    config_error(where + ": are_you_sure finalization needs a single-valued answer");

  const auto& b = spec.beceptivity;
  if (b.method != BeceptivityMethod::kNone) {
    if (answer.kind != llm::ValueKind::kFreeText)
      config_error(where + ": beceptivity applies to free_text answers only");
    if (!(b.min_required >= 0)) config_error(where + ": min_required must be >= 0");
    if (!(b.scale_max > 0)) config_error(where + ": scale_max must be > 0");
    if (b.max_refinement_depth < 1) config_error(where + ": max_refinement_depth must be >= 1");
    if (b.method == BeceptivityMethod::kDbLookup && text::trim(b.hierarchy).empty())
      config_error(where + ": db_lookup needs a hierarchy name");
    if (b.method == BeceptivityMethod::kInline && !answer.beceptivity_requested)
      config_error(where + ": inline beceptivity must be requested on the answer element");
  }
  if (!spec.object_expansion_styles.empty() && answer.kind != llm::ValueKind::kFreeText)
    config_error(where + ": expansion styles apply to free_text answers only");
  for (const auto& style : spec.object_expansion_styles)
    if (text::trim(style).empty()) config_error(where + ": empty expansion style");
}

llm::ResponseSchema PromptGroup::combined_schema() const {
  std::vector<llm::ResponseElement> elements;
  for (const auto& spec : specs)
    for (const auto& e : spec.schema.elements()) elements.push_back(e);
  return llm::ResponseSchema::create(std::move(elements));
}

int PromptGroup::samples() const {
  int n = 1;
  for (const auto& spec : specs) n = std::max(n, spec.are_you_sure.samples());
  return n;
}

const ExpansionStyles& default_expansion_styles() {
  static const ExpansionStyles styles = {
      {"simple",
       "Rewrite the term below in several different ways using simple, everyday words that a "
       "layperson would use."},
      {"clinical",
       "Rewrite the term below in several different ways using precise clinical terminology."},
  };
  return styles;
}

RunConfig parse_run_config(std::string_view json_text) {
  auto j = ordered_json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) config_error("run configuration is not a JSON object");

  check_keys(j, {"code_set", "workers", "pricing", "budget", "expansion_styles", "relationships"},
             "run configuration");
  RunConfig config;
  config.code_set = get_or<std::string>(j, "code_set", "");
  if (text::trim(config.code_set).empty()) config_error("run configuration needs 'code_set'");
  config.workers = get_or<int>(j, "workers", 1);
  if (config.workers < 1) config_error("workers must be at least 1");

  if (j.contains("pricing")) {
    const auto& p = j["pricing"];
    check_keys(p, {"prompt_token", "completion_token"}, "pricing");
    llm::Pricing pricing;
    if (p.contains("prompt_token"))
      pricing.per_prompt_token = parse_money(p["prompt_token"], "pricing.prompt_token");
    if (p.contains("completion_token"))
      pricing.per_completion_token = parse_money(p["completion_token"], "pricing.completion_token");
    config.pricing = pricing;
  }
  if (j.contains("budget") && !j["budget"].is_null()) config.budget = parse_money(j["budget"], "budget");

  if (j.contains("expansion_styles")) {
    if (!j["expansion_styles"].is_object()) config_error("expansion_styles must be an object");
    for (const auto& [name, instruction] : j["expansion_styles"].items())
      config.expansion_styles[name] = instruction.get<std::string>();
  }

  if (!j.contains("relationships") || !j["relationships"].is_array() || j["relationships"].empty())
    config_error("run configuration needs a non-empty 'relationships' array");

  std::set<std::string> ids;
  std::map<std::string, std::size_t> group_index;
  for (const auto& r : j["relationships"]) {
    auto spec = parse_relationship(r);
    if (!ids.insert(spec.id).second) config_error("duplicate relationship id '" + spec.id + "'");
    for (const auto& style : spec.object_expansion_styles)
      if (!config.expansion_styles.count(style))
        config_error("relationship '" + spec.id + "': unknown expansion style '" + style + "'");
    auto group = get_or<std::string>(r, "group", "");
    if (group.empty() || !group_index.count(group)) {
      if (!group.empty()) group_index[group] = config.groups.size();
      config.groups.push_back({group.empty() ? spec.id : group, {}});
      config.groups.back().specs.push_back(std::move(spec));
      continue;
    }
    auto& g = config.groups[group_index[group]];
    if (g.prompt().body() != spec.prompt.body())
      config_error("relationship '" + spec.id + "': group '" + group +
                   "' members must share one template");
    g.specs.push_back(std::move(spec));
  }
  for (const auto& g : config.groups) {
    try {
      g.combined_schema();
    } catch (const Error& e) {
      config_error("group '" + g.id + "': " + e.what());
    }
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open run configuration " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

}  // namespace termgraph::extract
