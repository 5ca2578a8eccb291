#include "termgraph/extract/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/extract/aggregate.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::extract {

namespace {

constexpr std::string_view kRequeryElement = "beceptivity";
constexpr std::string_view kExpansionElement = "expansions";

[[noreturn]] void assessment_error(const std::string& text, const std::string& why) {
  throw Error(ErrorCode::kAssessmentError, "beceptivity of '" + text + "': " + why);
}

std::string item_key(std::string_view text) { return text::to_lower(text::collapse_whitespace(text)); }

}  // namespace

// Texts seen so far for one (concept, relationship); a text is assessed once.
struct Extractor::SpecState {
  store::Id run_id = 0;
  std::string subject;
  std::set<std::string> seen;
};

struct Extractor::ConceptResult {
  std::vector<store::Triple> triples;
  std::vector<store::RefinementRecord> refinements;
  std::vector<store::AssessmentRecord> assessments;
  store::Id run_id = 0;
  std::size_t items_refined = 0;
  std::size_t replacements = 0;
  std::size_t dropped = 0;
  std::size_t failed = 0;
  std::size_t killed = 0;
  std::size_t key_unmapped = 0;
  std::size_t invalid_values = 0;
  std::size_t missing_values = 0;
  std::size_t parse_failures = 0;
  std::size_t assessment_errors = 0;
  std::size_t expansion_failures = 0;
};

llm::ResponseSchema requery_schema(double scale_max) {
  llm::ResponseElement e;
  e.name = std::string(kRequeryElement);
  e.kind = llm::ValueKind::kNumeric;
  e.description = fmt::format("A number from 0 to {}.", text::format_number(scale_max));
  return llm::ResponseSchema::create({e});
}

std::string requery_prompt(std::string_view text, double scale_max,
                           const llm::ProviderCapabilities& caps) {
  return llm::build_format_instructions(requery_schema(scale_max), caps) + "\n\n" +
         fmt::format(
             "Beceptivity describes how specific a term is. On a scale from 0 to {}, where 0 is "
             "the most general or vague and higher values are more specific or detailed, rate the "
             "beceptivity of the term below.\nTerm: {}",
             text::format_number(scale_max), text);
}

llm::ResponseSchema refinement_schema(const RelationshipSpec& spec) {
  llm::ResponseElement e = spec.answer();
  e.multi_response = true;
  e.dictionary.reset();
  e.no_write = false;
  return llm::ResponseSchema::create({e});
}

std::string refinement_prompt(const RelationshipSpec& spec, std::string_view item,
                              std::string_view concept_text, const llm::ProviderCapabilities& caps) {
  return llm::build_format_instructions(refinement_schema(spec), caps) + "\n\n" +
         fmt::format(
             "The answer \"{}\" is too general. Replace it with one or more answers that are more "
             "specific, for the question below.\n\n{}",
             item, spec.prompt.render(concept_text));
}

llm::ResponseSchema expansion_schema() {
  llm::ResponseElement e;
  e.name = std::string(kExpansionElement);
  e.kind = llm::ValueKind::kFreeText;
  e.multi_response = true;
  return llm::ResponseSchema::create({e});
}

std::string expansion_prompt(std::string_view text, std::string_view style_instruction,
                             const llm::ProviderCapabilities& caps) {
  return llm::build_format_instructions(expansion_schema(), caps) + "\n\n" +
         fmt::format("{}\nTerm: {}", style_instruction, text);
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["status"] = store::run_status_name(status);
  j["concepts_total"] = concepts_total;
  j["concepts_processed"] = concepts_processed;
  j["concepts_skipped"] = concepts_skipped;
  j["triples_written"] = triples_written;
  j["items_refined"] = items_refined;
  j["replacements_written"] = replacements_written;
  j["items_dropped"] = items_dropped;
  j["items_failed"] = items_failed;
  j["items_killed"] = items_killed;
  j["key_unmapped"] = key_unmapped;
  j["invalid_values"] = invalid_values;
  j["missing_values"] = missing_values;
  j["parse_failures"] = parse_failures;
  j["assessment_errors"] = assessment_errors;
  j["expansion_failures"] = expansion_failures;
  j["provider_calls"] = provider_calls;
  j["prompt_tokens"] = prompt_tokens;
  j["completion_tokens"] = completion_tokens;
  j["cost"] = cost.to_string();
  j["limit"] = limit ? nlohmann::ordered_json(limit->to_string()) : nlohmann::ordered_json(nullptr);
  j["max_response_cost"] = max_response_cost.to_string();
  j["kill_triggered"] = kill_triggered;
  if (!error.empty()) {
    j["error_code"] = error_code;
    j["error"] = error;
  }
  return j.dump();
}

Extractor::Extractor(store::Store& store, llm::Gateway& gateway, embed::EmbeddingService& embeddings,
                     ExpansionStyles styles)
    : store_(store), gateway_(gateway), embeddings_(embeddings), styles_(std::move(styles)) {}

std::shared_ptr<std::mutex> Extractor::key_lock(const std::string& key) {
  std::lock_guard lock(locks_mu_);
  auto& slot = locks_[key];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

void Extractor::note_response_cost(const llm::CostLedger& ledger, const llm::TokenUsage& usage) {
  auto cost = ledger.cost_of(usage);
  std::lock_guard lock(cost_mu_);
  auto& slot = max_response_cost_[&ledger];
  slot = std::max(slot, cost);
}

BeceptivityAssessment Extractor::assess_beceptivity(
    const std::string& text, const std::optional<llm::ResponseItem>& inline_item,
    const BeceptivityConfig& config, llm::CostLedger& ledger) {
  BeceptivityAssessment out;
  out.text = text;
  out.source = config.method;
  auto in_range = [&](double v) { return std::isfinite(v) && v >= 0 && v <= config.scale_max; };

  switch (config.method) {
    case BeceptivityMethod::kNone:
      throw Error(ErrorCode::kInvalidArgument, "beceptivity method is none");

    case BeceptivityMethod::kInline: {
      if (!inline_item || !inline_item->beceptivity) assessment_error(text, "no inline value");
      if (!in_range(*inline_item->beceptivity))
        assessment_error(text, "inline value " + text::format_number(*inline_item->beceptivity) +
                                   " is outside the scale");
      out.value = *inline_item->beceptivity;
      return out;
    }

    case BeceptivityMethod::kRequery: {
      const auto model = gateway_.model_id();
      auto lock = key_lock("requery\n" + model + "\n" + text);
      std::lock_guard guard(*lock);
      if (auto cached = store_.cached_beceptivity(text, model, config.scale_max)) {
        out.value = *cached;
        out.from_cache = true;
        return out;
      }
      auto caps = gateway_.capabilities();
      auto result = gateway_.call(requery_prompt(text, config.scale_max, caps), ledger);
      if (result.status == llm::GatewayResult::Status::kBudgetKilled)
        assessment_error(text, "budget exhausted");
      if (result.status == llm::GatewayResult::Status::kFailed)
        assessment_error(text, "provider failure: " + result.error);
      note_response_cost(ledger, result.response.usage);
      llm::ParsedResponse parsed;
      try {
        parsed = llm::parse_response(result.response.text, requery_schema(config.scale_max), caps,
                                     llm::ParseMode::kLenient);
      } catch (const ParseError&) {
        assessment_error(text, "unparsable re-query answer");
      }
      const auto* el = parsed.find(kRequeryElement);
      if (!el || el->status != llm::ElementStatus::kOk || el->items.empty())
        assessment_error(text, "re-query answer has no number");
      auto value = text::parse_number(el->items.front().text);
      if (!value || !in_range(*value)) assessment_error(text, "re-query value outside the scale");
      store_.cache_beceptivity(text, model, config.scale_max, *value);
      out.value = *value;
      return out;
    }

    case BeceptivityMethod::kDbLookup: {
      auto pos = store_.hierarchy_position(config.hierarchy, text);
      if (!pos) assessment_error(text, "not found in hierarchy '" + config.hierarchy + "'");
      out.value = pos->max_depth == 0 ? 0.0
                                      : static_cast<double>(pos->depth) /
                                            static_cast<double>(pos->max_depth) * config.scale_max;
      return out;
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown beceptivity method");
}

RefinementOutcome Extractor::refine_underbeceptive(const std::string& item,
                                                   std::optional<double> item_value,
                                                   const std::string& concept_text,
                                                   const RelationshipSpec& spec,
                                                   llm::CostLedger& ledger) {
  RefinementOutcome out;
  if (spec.beceptivity.method == BeceptivityMethod::kNone) return out;
  if (item_value && *item_value >= spec.beceptivity.min_required) return out;
  SpecState state;
  state.seen.insert(item_key(item));
  out.applied = true;
  refine_into(item, concept_text, spec, 1, state, ledger, out);
  return out;
}

void Extractor::refine_into(const std::string& item, const std::string& concept_text,
                            const RelationshipSpec& spec, int depth, SpecState& state,
                            llm::CostLedger& ledger, RefinementOutcome& out) {
  const auto& cfg = spec.beceptivity;
  auto caps = gateway_.capabilities();
  auto schema = refinement_schema(spec);
  auto result = gateway_.call(refinement_prompt(spec, item, concept_text, caps), ledger);
  if (result.status == llm::GatewayResult::Status::kBudgetKilled) {
    out.killed = true;
    return;
  }
  if (result.status == llm::GatewayResult::Status::kFailed) {
    ++out.provider_failures;
    ++out.dropped;
    return;
  }
  note_response_cost(ledger, result.response.usage);

  std::vector<llm::ResponseItem> replacements;
  try {
    auto parsed = llm::parse_response(result.response.text, schema, caps, llm::ParseMode::kLenient);
    const auto* el = parsed.find(spec.answer().name);
    if (el && el->status == llm::ElementStatus::kOk) replacements = el->items;
  } catch (const ParseError&) {
  }
  std::size_t kept = 0;
  for (auto& rep : replacements) {
    std::string rep_text(text::trim(rep.text));
    if (rep_text.empty() || !state.seen.insert(item_key(rep_text)).second) continue;
    ++kept;
    out.lineage.push_back({state.run_id, state.subject, spec.predicate, item, rep_text, depth});

    std::optional<double> value;
    try {
      value = assess_beceptivity(rep_text, rep, cfg, ledger).value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAssessmentError) throw;
      ++out.assessment_errors;
      if (!ledger.dispatch_allowed()) {
        out.killed = true;
        return;
      }
    }
    out.assessments.push_back({state.run_id, state.subject, spec.predicate, rep_text, value,
                               std::string(beceptivity_method_name(cfg.method))});
    if (value && *value >= cfg.min_required) {
      out.accepted.push_back({rep_text, item, depth});
    } else if (depth < cfg.max_refinement_depth) {
      refine_into(rep_text, concept_text, spec, depth + 1, state, ledger, out);
      if (out.killed) return;
    } else {
      ++out.dropped;
    }
  }
  // Nothing usable came back: the item is dropped.
  if (kept == 0) ++out.dropped;
}

ExpansionString Extractor::expand_string(const std::string& text_in, const std::string& style,
                                         llm::CostLedger& ledger) {
  std::string source(text::trim(text_in));
  if (source.empty()) throw Error(ErrorCode::kInvalidArgument, "expansion text is empty");
  if (text::trim(style).empty()) throw Error(ErrorCode::kInvalidArgument, "expansion style is empty");
  auto instruction = styles_.find(style);
  if (instruction == styles_.end())
    throw Error(ErrorCode::kInvalidArgument, "unknown expansion style '" + style + "'");

  ExpansionString out;
  out.source_text = source;
  out.style = style;
  out.model_id = gateway_.model_id();

  auto lock = key_lock("expand\n" + out.model_id + "\n" + style + "\n" + source);
  std::lock_guard guard(*lock);
  if (auto cached = store_.cached_expansion(source, style, out.model_id)) {
    out.generated_texts = std::move(*cached);
    out.from_cache = true;
  } else {
    auto caps = gateway_.capabilities();
    auto result = gateway_.call(expansion_prompt(source, instruction->second, caps), ledger);
    if (result.status != llm::GatewayResult::Status::kOk)
      throw Error(ErrorCode::kExpansionError,
                  "expansion of '" + source + "' failed: " +
                      (result.status == llm::GatewayResult::Status::kBudgetKilled ? "budget exhausted"
                                                                                  : result.error));
    note_response_cost(ledger, result.response.usage);
    std::vector<std::string> generated;
    try {
      auto parsed =
          llm::parse_response(result.response.text, expansion_schema(), caps, llm::ParseMode::kLenient);
      const auto* el = parsed.find(kExpansionElement);
      std::set<std::string> seen;
      if (el && el->status == llm::ElementStatus::kOk)
        for (const auto& item : el->items) {
          std::string t(text::trim(item.text));
          if (!t.empty() && seen.insert(t).second) generated.push_back(t);
        }
    } catch (const ParseError&) {
    }
    if (generated.empty())
      throw Error(ErrorCode::kExpansionError, "expansion of '" + source + "' returned nothing usable");
    out.generated_texts = store_.store_expansion(source, style, out.model_id, generated);
  }

  for (const auto& t : out.generated_texts) embeddings_.embed_string(t);
  embeddings_.summary_vector(embed::expansion_owner(style, source), out.generated_texts);
  return out;
}

void Extractor::process_group(const store::Code& concept_code, const PromptGroup& group,
                              const llm::ResponseSchema& schema, llm::CostLedger& ledger,
                              ConceptResult& out) {
  auto caps = gateway_.capabilities();
  const auto prompt = llm::render_prompt(group.prompt(), concept_code.main_text(), schema, caps);

  std::vector<std::optional<llm::ParsedResponse>> samples;
  bool failed = false;
  for (int k = 0; k < group.samples(); ++k) {
    auto result = gateway_.call(prompt, ledger, k);
    if (result.status == llm::GatewayResult::Status::kBudgetKilled) break;
    if (result.status == llm::GatewayResult::Status::kFailed) {
      failed = true;
      break;
    }
    note_response_cost(ledger, result.response.usage);
    try {
      samples.push_back(
          llm::parse_response(result.response.text, schema, caps, llm::ParseMode::kLenient));
    } catch (const ParseError&) {
      ++out.parse_failures;
      samples.push_back(std::nullopt);
    }
  }
  for (const auto& spec : group.specs) {
    if (failed) {
      ++out.failed;
    } else if (static_cast<int>(samples.size()) < spec.are_you_sure.samples()) {
      ++out.killed;
    } else {
      finalize_spec(concept_code, spec, samples, ledger, out);
    }
  }
}

void Extractor::finalize_spec(const store::Code& concept_code, const RelationshipSpec& spec,
                              const std::vector<std::optional<llm::ParsedResponse>>& samples,
                              llm::CostLedger& ledger, ConceptResult& out) {
  const auto& answer = spec.answer();
  const int needed = spec.are_you_sure.samples();

  std::vector<const llm::ElementResult*> valid;
  for (int i = 0; i < needed; ++i) {
    if (!samples[i]) continue;
    const auto* el = samples[i]->find(answer.name);
    if (!el) {
      ++out.missing_values;
      continue;
    }
    switch (el->status) {
      case llm::ElementStatus::kOk:
        if (el->items.empty())
          ++out.missing_values;
        else
          valid.push_back(el);
        break;
      case llm::ElementStatus::kKeyUnmapped: ++out.key_unmapped; break;
      case llm::ElementStatus::kInvalidValue: ++out.invalid_values; break;
      case llm::ElementStatus::kMissing: ++out.missing_values; break;
    }
  }
  if (valid.empty()) return;

  std::vector<llm::ResponseItem> items;
  try {
    switch (spec.are_you_sure.mode) {
      case AreYouSureMode::kNone: items = valid.front()->items; break;
      case AreYouSureMode::kVote: {
        std::vector<std::string> values;
        for (const auto* el : valid) values.push_back(el->items.front().text);
        items.push_back({finalize_categorical_vote(values), std::nullopt, false});
        break;
      }
      case AreYouSureMode::kBooleanVote: {
        std::vector<int> values;
        for (const auto* el : valid) {
          auto v = text::parse_number(el->items.front().text);
          if (!v || (*v != 0 && *v != 1)) {
            ++out.invalid_values;
            continue;
          }
          values.push_back(static_cast<int>(*v));
        }
        if (values.empty()) return;
        items.push_back({std::to_string(finalize_boolean(values)), std::nullopt, false});
        break;
      }
      case AreYouSureMode::kAverage:
      case AreYouSureMode::kSum: {
        std::vector<double> values;
        for (const auto* el : valid) {
          auto v = text::parse_number(el->items.front().text);
          if (!v) {
            ++out.invalid_values;
            continue;
          }
          values.push_back(*v);
        }
        if (values.empty()) return;
        auto mode = spec.are_you_sure.mode == AreYouSureMode::kSum ? NumericMode::kSum
                                                                   : NumericMode::kAverage;
        items.push_back({text::format_number(finalize_numeric(values, mode)), std::nullopt, false});
        break;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kAggregationError) throw;
    ++out.invalid_values;
    return;
  }

  const auto& subject = concept_code.code_id;
  auto add_triple = [&](const std::string& object, std::optional<std::string> parent) {
    store::Triple t;
    t.subject_code_id = subject;
    t.predicate = spec.predicate;
    t.object_value = object;
    t.object_kind = spec.object_kind();
    t.run_id = out.run_id;
    t.finalization = spec.finalization();
    t.replaced_parent = std::move(parent);
    out.triples.push_back(std::move(t));
  };
  auto expand = [&](const std::string& object) {
    for (const auto& style : spec.object_expansion_styles) {
      try {
        expand_string(object, style, ledger);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kExpansionError) throw;
        ++out.expansion_failures;
      }
    }
  };

  SpecState state;
  state.run_id = out.run_id;
  state.subject = subject;
  const auto& cfg = spec.beceptivity;
  for (const auto& item : items) {
    std::string object(text::trim(item.text));
    if (object.empty() || !state.seen.insert(item_key(object)).second) continue;
    if (cfg.method == BeceptivityMethod::kNone) {
      add_triple(object, std::nullopt);
      expand(object);
      continue;
    }

    std::optional<double> value;
    try {
      value = assess_beceptivity(object, item, cfg, ledger).value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAssessmentError) throw;
      ++out.assessment_errors;
      if (!ledger.dispatch_allowed()) {
        ++out.killed;
        continue;
      }
    }
    out.assessments.push_back({out.run_id, subject, spec.predicate, object, value,
                               std::string(beceptivity_method_name(cfg.method))});
    if (value && *value >= cfg.min_required) {
      add_triple(object, std::nullopt);
      expand(object);
      continue;
    }

    ++out.items_refined;
    RefinementOutcome refined;
    refined.applied = true;
    refine_into(object, concept_code.main_text(), spec, 1, state, ledger, refined);
    out.refinements.insert(out.refinements.end(), refined.lineage.begin(), refined.lineage.end());
    out.assessments.insert(out.assessments.end(), refined.assessments.begin(),
                           refined.assessments.end());
    out.dropped += refined.dropped;
    out.assessment_errors += refined.assessment_errors;
    out.failed += refined.provider_failures;
    if (refined.killed) ++out.killed;
    for (const auto& rep : refined.accepted) {
      add_triple(rep.text, rep.replaced_parent);
      ++out.replacements;
      expand(rep.text);
    }
  }
}

RunReport Extractor::run_population(store::Id code_set_id, const RunConfig& config,
                                    const ProgressCallback& progress) {
  std::vector<std::string> spec_ids;
  std::vector<llm::ResponseSchema> schemas;
  for (const auto& group : config.groups) {
    for (const auto& spec : group.specs) {
      validate_spec(spec);
      spec_ids.push_back(spec.id);
    }
    schemas.push_back(group.combined_schema());
  }
  for (const auto& group : config.groups)
    for (const auto& spec : group.specs)
      for (const auto& style : spec.object_expansion_styles)
        if (!styles_.count(style))
          throw Error(ErrorCode::kConfigError, "unknown expansion style '" + style + "'");

  const auto members = store_.code_set_members(code_set_id);
  auto run = store_.create_run(code_set_id, spec_ids);
  store_.start_run(run.id);

  llm::CostLedger ledger(config.pricing.value_or(llm::Pricing{}), config.budget);
  const long calls_before = gateway_.dispatched_calls();

  RunReport report;
  report.run_id = run.id;
  report.concepts_total = members.size();
  report.limit = config.budget;

  std::mutex report_mu;  // guards report counters and the run's writes
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::string first_error;
  std::string first_error_code;
  auto note_error = [&](const std::exception& e) {
    if (!first_error.empty()) return;
    first_error = e.what();
    auto* err = dynamic_cast<const Error*>(&e);
    first_error_code = std::string(error_code_name(err ? err->code() : ErrorCode::kStorageError));
  };
  std::atomic<bool> aborted{false};

  auto worker = [&] {
    for (;;) {
      auto index = next.fetch_add(1);
      if (index >= members.size()) return;
      const auto& concept_code = members[index];
      ConceptResult result;
      result.run_id = run.id;
      bool skipped = false;
      if (!ledger.dispatch_allowed() || aborted.load()) {
        skipped = true;
      } else {
        try {
          for (std::size_t g = 0; g < config.groups.size(); ++g)
            process_group(concept_code, config.groups[g], schemas[g], ledger, result);
        } catch (const std::exception& e) {
          std::lock_guard lock(report_mu);
          note_error(e);
          aborted = true;
          return;
        }
      }

      std::lock_guard lock(report_mu);
      if (skipped) {
        ++report.concepts_skipped;
        for (const auto& group : config.groups) report.items_killed += group.specs.size();
      } else {
        try {
          report.triples_written += store_.insert_triples(run.id, result.triples);
          store_.record_refinements(result.refinements);
          store_.record_assessments(result.assessments);
        } catch (const std::exception& e) {
          note_error(e);
          aborted = true;
          return;
        }
        ++report.concepts_processed;
        report.items_refined += result.items_refined;
        report.replacements_written += result.replacements;
        report.items_dropped += result.dropped;
        report.items_failed += result.failed;
        report.items_killed += result.killed;
        report.key_unmapped += result.key_unmapped;
        report.invalid_values += result.invalid_values;
        report.missing_values += result.missing_values;
        report.parse_failures += result.parse_failures;
        report.assessment_errors += result.assessment_errors;
        report.expansion_failures += result.expansion_failures;
      }
      auto finished = ++done;
      if (progress) progress(finished, members.size());
    }
  };

  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(members.size())));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  auto snap = ledger.snapshot();
  report.provider_calls = gateway_.dispatched_calls() - calls_before;
  report.prompt_tokens = snap.prompt_tokens;
  report.completion_tokens = snap.completion_tokens;
  report.cost = snap.accumulated_cost;
  report.kill_triggered = snap.killed;
  {
    std::lock_guard lock(cost_mu_);
    report.max_response_cost = max_response_cost_[&ledger];
    max_response_cost_.erase(&ledger);
  }
  if (!first_error.empty()) {
    report.status = store::RunStatus::kFailed;
    report.error = first_error;
    report.error_code = first_error_code;
  } else {
    report.status = snap.killed ? store::RunStatus::kKilledBudget : store::RunStatus::kCompleted;
  }
  store_.finish_run(run.id, report.status, snap.prompt_tokens, snap.completion_tokens,
                    snap.accumulated_cost.to_string(), report.to_json());
  return report;
}

}  // namespace termgraph::extract
