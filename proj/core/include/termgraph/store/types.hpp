#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace termgraph::store {

using Id = std::int64_t;

struct TermString {
  std::string text;
  int source_rank = 0;

  bool operator==(const TermString&) const = default;
};

struct Code {
  std::string code_id;
  Id terminology_id = 0;
  // Ordered by source_rank, then text.
  std::vector<TermString> strings;
  // Index into strings. The lowest source_rank is the main string.
  std::size_t main_string = 0;

  const std::string& main_text() const { return strings.at(main_string).text; }
  bool operator==(const Code&) const = default;
};

struct Terminology {
  Id id = 0;
  std::string name;
  // Ordered by code_id.
  std::vector<Code> codes;

  const Code* find(std::string_view code_id) const;
  std::size_t string_count() const;
};

struct ImportRow {
  std::string code_id;
  std::string text;
  int source_rank = 0;
};

struct RowRejection {
  std::size_t row_index = 0;  // 0-based position in the input stream
  std::string reason;
};

struct ImportReport {
  Terminology terminology;
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::size_t duplicates_skipped = 0;
  std::vector<RowRejection> rejections;
};

struct CodeSet {
  Id id = 0;
  std::string name;
  Id terminology_id = 0;
  // Sorted ascending.
  std::vector<std::string> member_code_ids;
  std::string source_filter;
  std::optional<std::string> expansion_style;
  // Set when the filter matched nothing.
  bool empty_warning = false;
  // Content hash of the member list; changes whenever membership does.
  std::string version;
};

enum class ObjectKind { kFreeText, kCategorical, kNumeric };
enum class Finalization { kSingle, kVote, kAverage, kSum, kBooleanVote };

std::string_view object_kind_name(ObjectKind kind);
ObjectKind parse_object_kind(std::string_view name);
std::string_view finalization_name(Finalization f);
Finalization parse_finalization(std::string_view name);

struct Triple {
  std::string subject_code_id;
  std::string predicate;
  std::string object_value;
  ObjectKind object_kind = ObjectKind::kFreeText;
  Id run_id = 0;
  Finalization finalization = Finalization::kSingle;
  // The under-beceptive object this triple's object replaced.
  std::optional<std::string> replaced_parent;

  bool operator==(const Triple&) const = default;
};

enum class RunStatus { kPending, kRunning, kCompleted, kKilledBudget, kFailed };

std::string_view run_status_name(RunStatus status);
RunStatus parse_run_status(std::string_view name);
bool is_terminal(RunStatus status);

struct Run {
  Id id = 0;
  Id code_set_id = 0;
  std::vector<std::string> spec_ids;
  RunStatus status = RunStatus::kPending;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::string cost = "0.00";
  std::string started_at;
  std::string ended_at;
  // Structured run report (JSON text), empty until the run ends.
  std::string report;
};

// One refinement step: `child` replaced the under-beceptive `parent`.
struct RefinementRecord {
  Id run_id = 0;
  std::string subject_code_id;
  std::string predicate;
  std::string parent;
  std::string child;
  int depth = 1;
};

struct AssessmentRecord {
  Id run_id = 0;
  std::string subject_code_id;
  std::string predicate;
  std::string text;
  // Absent when the assessment could not be parsed.
  std::optional<double> value;
  std::string source;
};

struct HierarchyEdge {
  std::string term;
  std::optional<std::string> parent;
};

struct RankedCode {
  std::string code_id;
  double distance = 0;

  bool operator==(const RankedCode&) const = default;
};

struct StoredMatch {
  std::string fingerprint;
  std::string object_string;
  Id code_set_id = 0;
  double z = 0;
  int n = 0;
  std::string selection;
  std::vector<RankedCode> ranked;
};

using Cell = std::optional<std::string>;

struct CustomTable {
  std::string name;
  int version = 0;
  std::string defining_query;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::string created_at;
};

enum class JobStatus { kQueued, kRunning, kSucceeded, kFailed, kKilledBudget };
std::string_view job_status_name(JobStatus status);
JobStatus parse_job_status(std::string_view name);

struct JobRecord {
  Id id = 0;
  std::string kind;
  JobStatus status = JobStatus::kQueued;
  std::int64_t done = 0;
  std::int64_t total = 0;
  std::string result_ref;
  std::string error;
  std::optional<std::string> idempotency_key;
};

}  // namespace termgraph::store
