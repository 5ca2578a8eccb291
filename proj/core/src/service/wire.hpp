#pragma once

// JSON shapes shared by the HTTP service and the CLI.

#include <json.hpp>

#include "termgraph/error.hpp"
#include "termgraph/extract/engine.hpp"
#include "termgraph/match/matcher.hpp"
#include "termgraph/service/workspace.hpp"
#include "termgraph/store/types.hpp"

namespace termgraph::service::wire {

using Json = nlohmann::ordered_json;

Json terminology_summary(const store::Terminology& t);
Json import_report(const store::ImportReport& r);
Json code_set(const store::CodeSet& cs);
Json code_set_result(const CodeSetResult& r);
Json run(const store::Run& r);
Json triple(const store::Triple& t);
Json stored_match(const store::StoredMatch& m);
Json match_result(const match::MatchResult& r, const std::string& object, const std::string& code_set);
Json batch_result(const match::BatchResult& r);
Json custom_table(const store::CustomTable& t);
Json job(const store::JobRecord& j);
Json error(const Error& e);

// Request bodies. Each throws kInvalidArgument naming the bad field.
struct ImportRequest {
  std::string name;
  std::string format = "tsv";  // tsv, csv or columnar
  std::string content;
  std::optional<std::string> hierarchy;  // "term<TAB>parent" lines
};
ImportRequest parse_import_request(const std::string& body);
store::ParsedRows parse_rows(const std::string& format, const std::string& content);

struct CodeSetRequest {
  std::string terminology;
  std::string name;
  std::string filter = "all";
  std::optional<std::string> expansion_style;
};
CodeSetRequest parse_code_set_request(const std::string& body);

BatchRequest parse_batch_request(const std::string& body);

struct CustomTableRequest {
  std::string name;
  std::string query;
};
CustomTableRequest parse_custom_table_request(const std::string& body);

}  // namespace termgraph::service::wire
