#include "service/wire.hpp"

#include <sstream>

#include "termgraph/store/import_format.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::service::wire {

namespace {

Json parse_object(const std::string& body) {
  auto j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  return j;
}

std::string required_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string() || text::trim(j[key].get<std::string>()).empty())
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + key + "' must be a non-empty string");
  return j[key].get<std::string>();
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string())
    throw Error(ErrorCode::kInvalidArgument, std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

Json cells(const std::vector<store::Cell>& row) {
  Json out = Json::array();
  for (const auto& c : row) out.push_back(c ? Json(*c) : Json(nullptr));
  return out;
}

}  // namespace

Json terminology_summary(const store::Terminology& t) {
  return {{"id", t.id}, {"name", t.name}, {"codes", t.codes.size()}, {"strings", t.string_count()}};
}

Json import_report(const store::ImportReport& r) {
  Json j;
  j["terminology"] = terminology_summary(r.terminology);
  j["rows_read"] = r.rows_read;
  j["rows_rejected"] = r.rows_rejected;
  j["duplicates_skipped"] = r.duplicates_skipped;
  Json rej = Json::array();
  for (const auto& x : r.rejections) rej.push_back({{"row", x.row_index}, {"reason", x.reason}});
  j["rejections"] = rej;
  return j;
}

Json code_set(const store::CodeSet& cs) {
  Json j;
  j["id"] = cs.id;
  j["name"] = cs.name;
  j["terminology_id"] = cs.terminology_id;
  j["filter"] = cs.source_filter;
  j["expansion_style"] = cs.expansion_style ? Json(*cs.expansion_style) : Json(nullptr);
  j["version"] = cs.version;
  j["empty_warning"] = cs.empty_warning;
  j["members"] = cs.member_code_ids;
  return j;
}

Json code_set_result(const CodeSetResult& r) {
  auto j = code_set(r.code_set);
  if (r.expansions)
    j["expansions"] = {{"requested", r.expansions->requested},
                       {"generated", r.expansions->generated},
                       {"cached", r.expansions->cached},
                       {"failed", r.expansions->failed},
                       {"killed", r.expansions->killed}};
  return j;
}

Json run(const store::Run& r) {
  Json j;
  j["id"] = r.id;
  j["code_set_id"] = r.code_set_id;
  j["relationships"] = r.spec_ids;
  j["status"] = store::run_status_name(r.status);
  j["prompt_tokens"] = r.prompt_tokens;
  j["completion_tokens"] = r.completion_tokens;
  j["cost"] = r.cost;
  j["started_at"] = r.started_at;
  j["ended_at"] = r.ended_at;
  j["report"] = r.report.empty() ? Json(nullptr) : Json::parse(r.report);
  return j;
}

Json triple(const store::Triple& t) {
  Json j;
  j["subject"] = t.subject_code_id;
  j["predicate"] = t.predicate;
  j["object"] = t.object_value;
  j["object_kind"] = store::object_kind_name(t.object_kind);
  j["finalization"] = store::finalization_name(t.finalization);
  j["replaced_parent"] = t.replaced_parent ? Json(*t.replaced_parent) : Json(nullptr);
  j["run_id"] = t.run_id;
  return j;
}

namespace {
Json ranked(const std::vector<store::RankedCode>& codes) {
  Json out = Json::array();
  for (std::size_t i = 0; i < codes.size(); ++i)
    out.push_back({{"rank", i + 1}, {"code_id", codes[i].code_id}, {"distance", codes[i].distance}});
  return out;
}
}  // namespace

Json stored_match(const store::StoredMatch& m) {
  Json j;
  j["object"] = m.object_string;
  j["code_set_id"] = m.code_set_id;
  j["z"] = m.z;
  j["n"] = m.n;
  j["selection"] = m.selection;
  j["fingerprint"] = m.fingerprint;
  j["ranked"] = ranked(m.ranked);
  return j;
}

Json match_result(const match::MatchResult& r, const std::string& object,
                  const std::string& code_set_name) {
  Json j;
  j["object"] = object;
  j["code_set"] = code_set_name;
  j["fingerprint"] = r.query_fingerprint;
  j["from_cache"] = r.from_cache;
  j["best"] = r.best ? Json(*r.best) : Json(nullptr);
  j["ranked"] = ranked(r.ranked);
  return j;
}

Json batch_result(const match::BatchResult& r) {
  Json j;
  j["computed"] = r.computed;
  j["cached"] = r.cached;
  Json ms = Json::array();
  for (const auto& m : r.matches) ms.push_back(stored_match(m));
  j["matches"] = ms;
  return j;
}

Json custom_table(const store::CustomTable& t) {
  Json j;
  j["name"] = t.name;
  j["version"] = t.version;
  j["query"] = t.defining_query;
  j["columns"] = t.columns;
  Json rows = Json::array();
  for (const auto& r : t.rows) rows.push_back(cells(r));
  j["rows"] = rows;
  j["created_at"] = t.created_at;
  return j;
}

Json job(const store::JobRecord& job) {
  Json j;
  j["id"] = job.id;
  j["kind"] = job.kind;
  j["status"] = store::job_status_name(job.status);
  j["progress"] = {{"done", job.done}, {"total", job.total}};
  j["result_ref"] = job.result_ref.empty() ? Json(nullptr) : Json(job.result_ref);
  j["error"] = job.error.empty() ? Json(nullptr) : Json(job.error);
  j["idempotency_key"] = job.idempotency_key ? Json(*job.idempotency_key) : Json(nullptr);
  return j;
}

Json error(const Error& e) {
  Json j;
  j["code"] = error_code_name(e.code());
  j["message"] = e.what();
  if (auto q = dynamic_cast<const QueryError*>(&e)) j["position"] = q->position();
  return Json{{"error", j}};
}

store::ParsedRows parse_rows(const std::string& format, const std::string& content) {
  if (format == "columnar") return store::read_columnar_rows(content);
  std::istringstream in(content);
  if (format == "tsv") return store::read_delimited_rows(in, '\t');
  if (format == "csv") return store::read_delimited_rows(in, ',');
  throw Error(ErrorCode::kInvalidArgument, "format must be tsv, csv or columnar, not '" + format + "'");
}

ImportRequest parse_import_request(const std::string& body) {
  auto j = parse_object(body);
  ImportRequest r;
  r.name = required_string(j, "name");
  if (auto f = optional_string(j, "format")) r.format = *f;
  if (!j.contains("content") || !j["content"].is_string())
    throw Error(ErrorCode::kInvalidArgument, "field 'content' must be a string");
  r.content = j["content"].get<std::string>();
  r.hierarchy = optional_string(j, "hierarchy");
  return r;
}

CodeSetRequest parse_code_set_request(const std::string& body) {
  auto j = parse_object(body);
  CodeSetRequest r;
  r.terminology = required_string(j, "terminology");
  r.name = required_string(j, "name");
  if (auto f = optional_string(j, "filter")) r.filter = *f;
  r.expansion_style = optional_string(j, "expansion_style");
  return r;
}

BatchRequest parse_batch_request(const std::string& body) {
  auto j = parse_object(body);
  BatchRequest r;
  if (!j.contains("run_id") || !j["run_id"].is_number_integer())
    throw Error(ErrorCode::kInvalidArgument, "field 'run_id' must be an integer");
  r.run_id = j["run_id"].get<store::Id>();
  r.code_set = required_string(j, "code_set");
  r.selection = match::parse_selection(optional_string(j, "subject_kinds").value_or("CLS"),
                                       optional_string(j, "object_kinds").value_or("CLS"),
                                       j.value("include_expansions", false));
  if (j.contains("z")) {
    if (!j["z"].is_number()) throw Error(ErrorCode::kInvalidArgument, "field 'z' must be a number");
    r.z = j["z"].get<double>();
  }
  if (j.contains("n")) {
    if (!j["n"].is_number_integer())
      throw Error(ErrorCode::kInvalidArgument, "field 'n' must be an integer");
    r.n = j["n"].get<int>();
  }
  return r;
}

CustomTableRequest parse_custom_table_request(const std::string& body) {
  auto j = parse_object(body);
  return {required_string(j, "name"), required_string(j, "query")};
}

}  // namespace termgraph::service::wire
