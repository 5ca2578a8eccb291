#include "termgraph/store/store.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "sqlite.hpp"
#include "termgraph/error.hpp"
#include "termgraph/util/hash.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::store {

using nlohmann::json;
using Lock = std::lock_guard<std::recursive_mutex>;

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta(key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS terminologies(id INTEGER PRIMARY KEY, name TEXT NOT NULL UNIQUE);
CREATE TABLE IF NOT EXISTS codes(
  terminology_id INTEGER NOT NULL, code_id TEXT NOT NULL, main_string TEXT NOT NULL,
  PRIMARY KEY(terminology_id, code_id));
CREATE TABLE IF NOT EXISTS strings(
  terminology_id INTEGER NOT NULL, code_id TEXT NOT NULL, text TEXT NOT NULL,
  source_rank INTEGER NOT NULL, PRIMARY KEY(terminology_id, code_id, text));
CREATE TABLE IF NOT EXISTS code_sets(
  id INTEGER PRIMARY KEY, name TEXT NOT NULL UNIQUE, terminology_id INTEGER NOT NULL,
  filter TEXT NOT NULL, expansion_style TEXT, version TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS code_set_members(
  code_set_id INTEGER NOT NULL, code_id TEXT NOT NULL, PRIMARY KEY(code_set_id, code_id));
CREATE TABLE IF NOT EXISTS runs(
  id INTEGER PRIMARY KEY, code_set_id INTEGER NOT NULL, spec_ids TEXT NOT NULL,
  status TEXT NOT NULL, prompt_tokens INTEGER NOT NULL DEFAULT 0,
  completion_tokens INTEGER NOT NULL DEFAULT 0, cost TEXT NOT NULL DEFAULT '0.00',
  started_at TEXT, ended_at TEXT, report TEXT NOT NULL DEFAULT '');
CREATE TABLE IF NOT EXISTS triples(
  run_id INTEGER NOT NULL, subject_code_id TEXT NOT NULL, predicate TEXT NOT NULL,
  object_value TEXT NOT NULL, object_kind TEXT NOT NULL, finalization TEXT NOT NULL,
  replaced_parent TEXT,
  UNIQUE(run_id, subject_code_id, predicate, object_value));
CREATE TABLE IF NOT EXISTS refinements(
  run_id INTEGER NOT NULL, subject_code_id TEXT NOT NULL, predicate TEXT NOT NULL,
  parent TEXT NOT NULL, child TEXT NOT NULL, depth INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS assessments(
  run_id INTEGER NOT NULL, subject_code_id TEXT NOT NULL, predicate TEXT NOT NULL,
  text TEXT NOT NULL, value REAL, source TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS beceptivity_cache(
  text TEXT NOT NULL, model_id TEXT NOT NULL, scale_max REAL NOT NULL, value REAL NOT NULL,
  PRIMARY KEY(text, model_id, scale_max));
CREATE TABLE IF NOT EXISTS expansions(
  source_text TEXT NOT NULL, style TEXT NOT NULL, model_id TEXT NOT NULL,
  generated TEXT NOT NULL, PRIMARY KEY(source_text, style, model_id));
CREATE TABLE IF NOT EXISTS hierarchy(
  name TEXT NOT NULL, term TEXT NOT NULL, term_key TEXT NOT NULL, parent_key TEXT,
  PRIMARY KEY(name, term_key));
CREATE TABLE IF NOT EXISTS vectors(
  owner TEXT NOT NULL, model_id TEXT NOT NULL, kind TEXT NOT NULL, dimension INTEGER NOT NULL,
  data BLOB NOT NULL, PRIMARY KEY(owner, model_id, kind));
CREATE TABLE IF NOT EXISTS match_queries(
  fingerprint TEXT PRIMARY KEY, object_string TEXT NOT NULL, code_set_id INTEGER NOT NULL,
  z REAL NOT NULL, n INTEGER NOT NULL, selection TEXT NOT NULL, seq INTEGER NOT NULL);
CREATE TABLE IF NOT EXISTS matches(
  fingerprint TEXT NOT NULL, rank INTEGER NOT NULL, code_id TEXT NOT NULL,
  distance REAL NOT NULL, PRIMARY KEY(fingerprint, rank));
CREATE TABLE IF NOT EXISTS custom_tables(
  name TEXT NOT NULL, version INTEGER NOT NULL, query TEXT NOT NULL, columns TEXT NOT NULL,
  created_at TEXT NOT NULL, PRIMARY KEY(name, version));
CREATE TABLE IF NOT EXISTS custom_table_rows(
  name TEXT NOT NULL, version INTEGER NOT NULL, row_index INTEGER NOT NULL, cells TEXT NOT NULL,
  PRIMARY KEY(name, version, row_index));
CREATE TABLE IF NOT EXISTS jobs(
  id INTEGER PRIMARY KEY, kind TEXT NOT NULL, status TEXT NOT NULL,
  done INTEGER NOT NULL DEFAULT 0, total INTEGER NOT NULL DEFAULT 0,
  result_ref TEXT NOT NULL DEFAULT '', error TEXT NOT NULL DEFAULT '',
  idempotency_key TEXT UNIQUE, request TEXT NOT NULL DEFAULT '', created_at TEXT NOT NULL);
CREATE INDEX IF NOT EXISTS match_queries_object ON match_queries(object_string);
)sql";

// Tables a custom-table query may read.
const std::set<std::string> kQueryableTables = {
    "terminologies", "codes",       "strings",       "code_sets",         "code_set_members",
    "runs",          "triples",     "refinements",   "assessments",       "beceptivity_cache",
    "expansions",    "hierarchy",   "match_queries", "matches",           "custom_tables",
    "custom_table_rows"};

int read_only_authorizer(void*, int action, const char* arg1, const char*, const char*,
                         const char*) {
  switch (action) {
    case SQLITE_SELECT:
    case SQLITE_FUNCTION:
    case SQLITE_RECURSIVE:
      return SQLITE_OK;
    case SQLITE_READ:
      return arg1 && kQueryableTables.count(arg1) ? SQLITE_OK : SQLITE_DENY;
    default:
      return SQLITE_DENY;
  }
}

// SQLite 3.37 has no sqlite3_error_offset, so the offset is recovered from
// the token quoted in the message.
std::size_t error_offset(const std::string& query, const std::string& message) {
  auto quoted = [&](std::string_view marker) -> std::optional<std::size_t> {
    auto at = message.find(marker);
    if (at == std::string::npos) return std::nullopt;
    auto start = at + marker.size();
    auto end = message.find('"', start);
    if (end == std::string::npos) return std::nullopt;
    auto token = message.substr(start, end - start);
    auto pos = text::to_lower(query).find(text::to_lower(token));
    return pos == std::string::npos ? std::nullopt : std::optional(pos);
  };
  auto after_colon = [&](std::string_view marker) -> std::optional<std::size_t> {
    auto at = message.find(marker);
    if (at == std::string::npos) return std::nullopt;
    auto token = std::string(text::trim(std::string_view(message).substr(at + marker.size())));
    auto dot = token.rfind('.');
    if (dot != std::string::npos) token = token.substr(dot + 1);
    auto pos = text::to_lower(query).find(text::to_lower(token));
    return pos == std::string::npos ? std::nullopt : std::optional(pos);
  };
  if (auto p = quoted("near \"")) return *p;
  if (message.find("incomplete input") != std::string::npos) return query.size();
  if (auto p = after_colon("no such table: ")) return *p;
  if (auto p = after_colon("no such column: ")) return *p;
  if (auto p = after_colon("no such function: ")) return *p;
  return 0;
}

std::string hex_digest_of_blob(const void* data, int size) {
  return hash::sha256_hex(std::string_view(static_cast<const char*>(data), static_cast<std::size_t>(size)));
}

json column_json(sql::Statement& stmt, int i) {
  switch (stmt.column_type(i)) {
    case SQLITE_INTEGER: return stmt.column_int(i);
    case SQLITE_FLOAT: return stmt.column_double(i);
    case SQLITE_TEXT: return stmt.column_text(i);
    case SQLITE_BLOB:
      return hex_digest_of_blob(sqlite3_column_blob(stmt.handle(), i),
                                sqlite3_column_bytes(stmt.handle(), i));
    default: return nullptr;
  }
}

Cell column_cell(sql::Statement& stmt, int i) {
  switch (stmt.column_type(i)) {
    case SQLITE_NULL: return std::nullopt;
    case SQLITE_INTEGER: return std::to_string(stmt.column_int(i));
    case SQLITE_FLOAT: return text::format_number(stmt.column_double(i));
    case SQLITE_BLOB:
      return hex_digest_of_blob(sqlite3_column_blob(stmt.handle(), i),
                                sqlite3_column_bytes(stmt.handle(), i));
    default: return stmt.column_text(i);
  }
}

std::string normalize_term(std::string_view term) {
  return text::to_lower(text::collapse_whitespace(term));
}

[[noreturn]] void not_found(const std::string& what) { throw Error(ErrorCode::kNotFound, what); }

}  // namespace

std::string now_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const Code* Terminology::find(std::string_view code_id) const {
  auto it = std::lower_bound(codes.begin(), codes.end(), code_id,
                             [](const Code& c, std::string_view id) { return c.code_id < id; });
  return it != codes.end() && it->code_id == code_id ? &*it : nullptr;
}

std::size_t Terminology::string_count() const {
  std::size_t n = 0;
  for (const auto& c : codes) n += c.strings.size();
  return n;
}

std::string_view object_kind_name(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::kFreeText: return "free_text";
    case ObjectKind::kCategorical: return "categorical";
    case ObjectKind::kNumeric: return "numeric";
  }
  return "free_text";
}

ObjectKind parse_object_kind(std::string_view name) {
  if (name == "free_text") return ObjectKind::kFreeText;
  if (name == "categorical") return ObjectKind::kCategorical;
  if (name == "numeric") return ObjectKind::kNumeric;
  throw Error(ErrorCode::kInvalidArgument, "unknown object kind '" + std::string(name) + "'");
}

std::string_view finalization_name(Finalization f) {
  switch (f) {
    case Finalization::kSingle: return "single";
    case Finalization::kVote: return "vote";
    case Finalization::kAverage: return "average";
    case Finalization::kSum: return "sum";
    case Finalization::kBooleanVote: return "boolean_vote";
  }
  return "single";
}

Finalization parse_finalization(std::string_view name) {
  if (name == "single") return Finalization::kSingle;
  if (name == "vote") return Finalization::kVote;
  if (name == "average") return Finalization::kAverage;
  if (name == "sum") return Finalization::kSum;
  if (name == "boolean_vote") return Finalization::kBooleanVote;
  throw Error(ErrorCode::kInvalidArgument, "unknown finalization '" + std::string(name) + "'");
}

std::string_view run_status_name(RunStatus status) {
  switch (status) {
    case RunStatus::kPending: return "pending";
    case RunStatus::kRunning: return "running";
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kKilledBudget: return "killed_budget";
    case RunStatus::kFailed: return "failed";
  }
  return "pending";
}

RunStatus parse_run_status(std::string_view name) {
  for (auto s : {RunStatus::kPending, RunStatus::kRunning, RunStatus::kCompleted,
                 RunStatus::kKilledBudget, RunStatus::kFailed})
    if (run_status_name(s) == name) return s;
  throw Error(ErrorCode::kInvalidArgument, "unknown run status '" + std::string(name) + "'");
}

bool is_terminal(RunStatus status) {
  return status == RunStatus::kCompleted || status == RunStatus::kKilledBudget ||
         status == RunStatus::kFailed;
}

std::string_view job_status_name(JobStatus status) {
  switch (status) {
    case JobStatus::kQueued: return "queued";
    case JobStatus::kRunning: return "running";
    case JobStatus::kSucceeded: return "succeeded";
    case JobStatus::kFailed: return "failed";
    case JobStatus::kKilledBudget: return "killed_budget";
  }
  return "queued";
}

JobStatus parse_job_status(std::string_view name) {
  for (auto s : {JobStatus::kQueued, JobStatus::kRunning, JobStatus::kSucceeded, JobStatus::kFailed,
                 JobStatus::kKilledBudget})
    if (job_status_name(s) == name) return s;
  throw Error(ErrorCode::kInvalidArgument, "unknown job status '" + std::string(name) + "'");
}

Store::Store(const std::string& path) : db_(std::make_unique<sql::Database>(path)) {
  db_->exec("PRAGMA foreign_keys = OFF");
  if (path != ":memory:") db_->exec("PRAGMA journal_mode = WAL");
  create_schema();
}

Store::~Store() = default;

void Store::create_schema() {
  Lock lock(mu_);
  db_->exec(kSchema);
  auto stmt = db_->prepare("SELECT value FROM meta WHERE key = 'format_version'");
  if (stmt.step()) {
    auto version = stmt.column_text(0);
    if (version != std::to_string(kFormatVersion))
      throw Error(ErrorCode::kStorageError, "store format version " + version +
                                                " is not supported (expected " +
                                                std::to_string(kFormatVersion) + ")");
  } else {
    db_->prepare("INSERT INTO meta(key, value) VALUES ('format_version', ?)")
        .bind_all(std::to_string(kFormatVersion))
        .run();
  }
}

// ---------------------------------------------------------------------------
// terminologies

ImportReport Store::import_terminology(const std::string& name, std::span<const ImportRow> rows) {
  if (rows.empty()) throw Error(ErrorCode::kImportEmpty, "terminology import stream is empty");
  if (text::trim(name).empty()) throw Error(ErrorCode::kInvalidArgument, "terminology name is empty");

  ImportReport report;
  report.rows_read = rows.size();
  std::vector<const ImportRow*> valid;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (text::trim(row.code_id).empty()) {
      report.rejections.push_back({i, "empty code_id"});
    } else if (text::trim(row.text).empty()) {
      report.rejections.push_back({i, "empty string text"});
    } else if (row.source_rank < 0) {
      report.rejections.push_back({i, "negative source_rank"});
    } else {
      valid.push_back(&row);
    }
  }
  report.rows_rejected = report.rejections.size();
  if (valid.empty())
    throw Error(ErrorCode::kImportEmpty, "terminology import has no valid rows (" +
                                             std::to_string(report.rows_rejected) + " rejected)");

  Lock lock(mu_);
  sql::Transaction tx(*db_);
  db_->prepare("INSERT OR IGNORE INTO terminologies(name) VALUES (?)").bind_all(name).run();
  auto id_stmt = db_->prepare("SELECT id FROM terminologies WHERE name = ?");
  id_stmt.bind_all(name);
  id_stmt.step();
  Id terminology_id = id_stmt.column_int(0);

  auto insert = db_->prepare(
      "INSERT OR IGNORE INTO strings(terminology_id, code_id, text, source_rank) VALUES (?,?,?,?)");
  std::set<std::string> touched;
  for (const auto* row : valid) {
    std::string code_id(text::trim(row->code_id));
    std::string str(text::trim(row->text));
    insert.reset();
    insert.bind_all(terminology_id, code_id, str, row->source_rank).run();
    if (db_->changes() == 0) ++report.duplicates_skipped;
    touched.insert(code_id);
  }
  // Main string: lowest source_rank, ties broken by text.
  auto main = db_->prepare(
      "SELECT text FROM strings WHERE terminology_id = ? AND code_id = ? "
      "ORDER BY source_rank, text LIMIT 1");
  auto upsert = db_->prepare(
      "INSERT INTO codes(terminology_id, code_id, main_string) VALUES (?,?,?) "
      "ON CONFLICT(terminology_id, code_id) DO UPDATE SET main_string = excluded.main_string");
  for (const auto& code_id : touched) {
    main.reset();
    main.bind_all(terminology_id, code_id);
    main.step();
    auto text_value = main.column_text(0);
    upsert.reset();
    upsert.bind_all(terminology_id, code_id, text_value).run();
  }
  tx.commit();
  report.terminology = load_terminology_locked(terminology_id, name);
  return report;
}

Terminology Store::load_terminology_locked(Id id, const std::string& name) {
  Terminology t;
  t.id = id;
  t.name = name;
  auto stmt = db_->prepare(
      "SELECT s.code_id, s.text, s.source_rank, c.main_string FROM strings s "
      "JOIN codes c ON c.terminology_id = s.terminology_id AND c.code_id = s.code_id "
      "WHERE s.terminology_id = ? ORDER BY s.code_id, s.source_rank, s.text");
  stmt.bind_all(id);
  while (stmt.step()) {
    auto code_id = stmt.column_text(0);
    if (t.codes.empty() || t.codes.back().code_id != code_id) {
      Code c;
      c.code_id = code_id;
      c.terminology_id = id;
      t.codes.push_back(std::move(c));
    }
    auto& code = t.codes.back();
    code.strings.push_back({stmt.column_text(1), static_cast<int>(stmt.column_int(2))});
    if (code.strings.back().text == stmt.column_text(3)) code.main_string = code.strings.size() - 1;
  }
  return t;
}

Terminology Store::get_terminology(Id id) {
  Lock lock(mu_);
  auto stmt = db_->prepare("SELECT name FROM terminologies WHERE id = ?");
  stmt.bind_all(id);
  if (!stmt.step()) not_found("terminology " + std::to_string(id) + " not found");
  return load_terminology_locked(id, stmt.column_text(0));
}

std::optional<Terminology> Store::find_terminology(const std::string& name) {
  Lock lock(mu_);
  auto stmt = db_->prepare("SELECT id FROM terminologies WHERE name = ?");
  stmt.bind_all(name);
  if (!stmt.step()) return std::nullopt;
  return load_terminology_locked(stmt.column_int(0), name);
}

std::vector<Terminology> Store::list_terminologies() {
  Lock lock(mu_);
  std::vector<Terminology> out;
  auto stmt = db_->prepare("SELECT id, name FROM terminologies ORDER BY id");
  while (stmt.step()) out.push_back(load_terminology_locked(stmt.column_int(0), stmt.column_text(1)));
  return out;
}

std::optional<Code> Store::find_code(Id terminology_id, const std::string& code_id) {
  Lock lock(mu_);
  Code code;
  code.code_id = code_id;
  code.terminology_id = terminology_id;
  auto stmt = db_->prepare(
      "SELECT s.text, s.source_rank, c.main_string FROM strings s JOIN codes c "
      "ON c.terminology_id = s.terminology_id AND c.code_id = s.code_id "
      "WHERE s.terminology_id = ? AND s.code_id = ? ORDER BY s.source_rank, s.text");
  stmt.bind_all(terminology_id, code_id);
  while (stmt.step()) {
    code.strings.push_back({stmt.column_text(0), static_cast<int>(stmt.column_int(1))});
    if (code.strings.back().text == stmt.column_text(2)) code.main_string = code.strings.size() - 1;
  }
  if (code.strings.empty()) return std::nullopt;
  return code;
}

// ---------------------------------------------------------------------------
// code sets

CodeSet Store::create_code_set(Id terminology_id, const std::string& name, const CodeFilter& filter,
                               std::optional<std::string> expansion_style) {
  if (text::trim(name).empty()) throw Error(ErrorCode::kInvalidArgument, "code set name is empty");
  if (expansion_style && text::trim(*expansion_style).empty()) expansion_style.reset();
  Lock lock(mu_);
  auto terminology = get_terminology(terminology_id);
  if (find_code_set(name))
    throw Error(ErrorCode::kInvalidArgument, "code set '" + name + "' already exists");

  std::vector<std::string> members;
  for (const auto& code : terminology.codes)
    if (filter.matches(code)) members.push_back(code.code_id);
  std::string version = hash::sha256_hex(std::to_string(terminology_id) + "\n" + text::join(members, "\n"));

  sql::Transaction tx(*db_);
  db_->prepare(
         "INSERT INTO code_sets(name, terminology_id, filter, expansion_style, version) "
         "VALUES (?,?,?,?,?)")
      .bind_all(name, terminology_id, filter.source(), expansion_style, version)
      .run();
  Id id = db_->last_insert_rowid();
  auto insert = db_->prepare("INSERT INTO code_set_members(code_set_id, code_id) VALUES (?,?)");
  for (const auto& code_id : members) {
    // Referential integrity: every member resolves to a stored code.
    if (!terminology.find(code_id)) throw Error(ErrorCode::kNotFound, "code " + code_id + " missing");
    insert.reset();
    insert.bind_all(id, code_id).run();
  }
  tx.commit();
  return load_code_set_locked(id);
}

CodeSet Store::load_code_set_locked(Id id) {
  auto stmt = db_->prepare(
      "SELECT name, terminology_id, filter, expansion_style, version FROM code_sets WHERE id = ?");
  stmt.bind_all(id);
  if (!stmt.step()) not_found("code set " + std::to_string(id) + " not found");
  CodeSet cs;
  cs.id = id;
  cs.name = stmt.column_text(0);
  cs.terminology_id = stmt.column_int(1);
  cs.source_filter = stmt.column_text(2);
  cs.expansion_style = stmt.column_optional_text(3);
  cs.version = stmt.column_text(4);
  auto members = db_->prepare("SELECT code_id FROM code_set_members WHERE code_set_id = ? ORDER BY code_id");
  members.bind_all(id);
  while (members.step()) cs.member_code_ids.push_back(members.column_text(0));
  cs.empty_warning = cs.member_code_ids.empty();
  return cs;
}

CodeSet Store::get_code_set(Id id) {
  Lock lock(mu_);
  return load_code_set_locked(id);
}

std::optional<CodeSet> Store::find_code_set(const std::string& name) {
  Lock lock(mu_);
  auto stmt = db_->prepare("SELECT id FROM code_sets WHERE name = ?");
  stmt.bind_all(name);
  if (!stmt.step()) return std::nullopt;
  return load_code_set_locked(stmt.column_int(0));
}

std::vector<CodeSet> Store::list_code_sets() {
  Lock lock(mu_);
  std::vector<Id> ids;
  auto stmt = db_->prepare("SELECT id FROM code_sets ORDER BY id");
  while (stmt.step()) ids.push_back(stmt.column_int(0));
  std::vector<CodeSet> out;
  for (auto id : ids) out.push_back(load_code_set_locked(id));
  return out;
}

std::vector<Code> Store::code_set_members(Id code_set_id) {
  Lock lock(mu_);
  auto cs = load_code_set_locked(code_set_id);
  auto terminology = get_terminology(cs.terminology_id);
  std::vector<Code> out;
  for (const auto& id : cs.member_code_ids) {
    const Code* code = terminology.find(id);
    if (!code) not_found("code set member " + id + " has no code");
    out.push_back(*code);
  }
  return out;
}

// ---------------------------------------------------------------------------
// runs and triples

Run Store::create_run(Id code_set_id, const std::vector<std::string>& spec_ids) {
  Lock lock(mu_);
  load_code_set_locked(code_set_id);
  db_->prepare("INSERT INTO runs(code_set_id, spec_ids, status) VALUES (?,?,?)")
      .bind_all(code_set_id, json(spec_ids).dump(), std::string(run_status_name(RunStatus::kPending)))
      .run();
  return load_run_locked(db_->last_insert_rowid());
}

void Store::start_run(Id run_id) {
  Lock lock(mu_);
  auto run = load_run_locked(run_id);
  if (run.status != RunStatus::kPending)
    throw Error(ErrorCode::kRunClosed, "run " + std::to_string(run_id) + " is " +
                                           std::string(run_status_name(run.status)));
  db_->prepare("UPDATE runs SET status = 'running', started_at = ? WHERE id = ?")
      .bind_all(now_timestamp(), run_id)
      .run();
}

void Store::finish_run(Id run_id, RunStatus status, std::int64_t prompt_tokens,
                       std::int64_t completion_tokens, const std::string& cost,
                       const std::string& report_json) {
  if (!is_terminal(status)) throw Error(ErrorCode::kInvalidArgument, "finish_run needs a terminal status");
  Lock lock(mu_);
  auto run = load_run_locked(run_id);
  if (run.status != RunStatus::kRunning)
    throw Error(ErrorCode::kRunClosed, "run " + std::to_string(run_id) + " is not running");
  db_->prepare(
         "UPDATE runs SET status = ?, prompt_tokens = ?, completion_tokens = ?, cost = ?, "
         "ended_at = ?, report = ? WHERE id = ?")
      .bind_all(std::string(run_status_name(status)), prompt_tokens, completion_tokens, cost,
                now_timestamp(), report_json, run_id)
      .run();
}

Run Store::load_run_locked(Id id) {
  auto stmt = db_->prepare(
      "SELECT code_set_id, spec_ids, status, prompt_tokens, completion_tokens, cost, started_at, "
      "ended_at, report FROM runs WHERE id = ?");
  stmt.bind_all(id);
  if (!stmt.step()) not_found("run " + std::to_string(id) + " not found");
  Run run;
  run.id = id;
  run.code_set_id = stmt.column_int(0);
  run.spec_ids = json::parse(stmt.column_text(1)).get<std::vector<std::string>>();
  run.status = parse_run_status(stmt.column_text(2));
  run.prompt_tokens = stmt.column_int(3);
  run.completion_tokens = stmt.column_int(4);
  run.cost = stmt.column_text(5);
  run.started_at = stmt.column_optional_text(6).value_or("");
  run.ended_at = stmt.column_optional_text(7).value_or("");
  run.report = stmt.column_text(8);
  return run;
}

Run Store::get_run(Id run_id) {
  Lock lock(mu_);
  return load_run_locked(run_id);
}

std::vector<Run> Store::list_runs() {
  Lock lock(mu_);
  std::vector<Id> ids;
  auto stmt = db_->prepare("SELECT id FROM runs ORDER BY id");
  while (stmt.step()) ids.push_back(stmt.column_int(0));
  std::vector<Run> out;
  for (auto id : ids) out.push_back(load_run_locked(id));
  return out;
}

std::size_t Store::insert_triples(Id run_id, std::span<const Triple> triples) {
  for (const auto& t : triples) {
    if (text::trim(t.subject_code_id).empty() || text::trim(t.predicate).empty() ||
        text::trim(t.object_value).empty())
      throw Error(ErrorCode::kInvalidArgument, "triple has an empty field");
    if (t.object_kind == ObjectKind::kNumeric && !text::parse_number(t.object_value))
      throw Error(ErrorCode::kInvalidArgument,
                  "numeric triple object '" + t.object_value + "' is not a finite number");
  }
  Lock lock(mu_);
  auto run = load_run_locked(run_id);
  if (run.status != RunStatus::kRunning)
    throw Error(ErrorCode::kRunClosed, "run " + std::to_string(run_id) + " is " +
                                           std::string(run_status_name(run.status)));
  sql::Transaction tx(*db_);
  auto insert = db_->prepare(
      "INSERT OR IGNORE INTO triples(run_id, subject_code_id, predicate, object_value, object_kind, "
      "finalization, replaced_parent) VALUES (?,?,?,?,?,?,?)");
  std::size_t inserted = 0;
  for (const auto& t : triples) {
    insert.reset();
    insert.bind_all(run_id, t.subject_code_id, t.predicate, t.object_value,
                    std::string(object_kind_name(t.object_kind)),
                    std::string(finalization_name(t.finalization)), t.replaced_parent);
    insert.run();
    inserted += static_cast<std::size_t>(db_->changes());
  }
  tx.commit();
  return inserted;
}

std::vector<Triple> Store::load_triples_locked(const std::string& where, std::optional<Id> run_id) {
  auto stmt = db_->prepare(
      "SELECT run_id, subject_code_id, predicate, object_value, object_kind, finalization, "
      "replaced_parent FROM triples " +
      where + " ORDER BY run_id, subject_code_id, predicate, object_value");
  if (run_id) stmt.bind_all(*run_id);
  std::vector<Triple> out;
  while (stmt.step()) {
    Triple t;
    t.run_id = stmt.column_int(0);
    t.subject_code_id = stmt.column_text(1);
    t.predicate = stmt.column_text(2);
    t.object_value = stmt.column_text(3);
    t.object_kind = parse_object_kind(stmt.column_text(4));
    t.finalization = parse_finalization(stmt.column_text(5));
    t.replaced_parent = stmt.column_optional_text(6);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Triple> Store::triples_for_run(Id run_id) {
  Lock lock(mu_);
  load_run_locked(run_id);
  return load_triples_locked("WHERE run_id = ?", run_id);
}

std::vector<Triple> Store::all_triples() {
  Lock lock(mu_);
  return load_triples_locked("", std::nullopt);
}

void Store::record_refinements(std::span<const RefinementRecord> records) {
  Lock lock(mu_);
  sql::Transaction tx(*db_);
  auto insert = db_->prepare(
      "INSERT INTO refinements(run_id, subject_code_id, predicate, parent, child, depth) "
      "VALUES (?,?,?,?,?,?)");
  for (const auto& r : records) {
    insert.reset();
    insert.bind_all(r.run_id, r.subject_code_id, r.predicate, r.parent, r.child, r.depth).run();
  }
  tx.commit();
}

std::vector<RefinementRecord> Store::refinements_for_run(Id run_id) {
  Lock lock(mu_);
  auto stmt = db_->prepare(
      "SELECT subject_code_id, predicate, parent, child, depth FROM refinements WHERE run_id = ? "
      "ORDER BY subject_code_id, predicate, depth, parent, child");
  stmt.bind_all(run_id);
  std::vector<RefinementRecord> out;
  while (stmt.step())
    out.push_back({run_id, stmt.column_text(0), stmt.column_text(1), stmt.column_text(2),
                   stmt.column_text(3), static_cast<int>(stmt.column_int(4))});
  return out;
}

void Store::record_assessments(std::span<const AssessmentRecord> records) {
  Lock lock(mu_);
  sql::Transaction tx(*db_);
  auto insert = db_->prepare(
      "INSERT INTO assessments(run_id, subject_code_id, predicate, text, value, source) "
      "VALUES (?,?,?,?,?,?)");
  for (const auto& r : records) {
    insert.reset();
    insert.bind_all(r.run_id, r.subject_code_id, r.predicate, r.text);
    if (r.value)
      insert.bind(5, *r.value);
    else
      insert.bind_null(5);
    insert.bind(6, r.source);
    insert.run();
  }
  tx.commit();
}

std::vector<AssessmentRecord> Store::assessments_for_run(Id run_id) {
  Lock lock(mu_);
  auto stmt = db_->prepare(
      "SELECT subject_code_id, predicate, text, value, source FROM assessments WHERE run_id = ? "
      "ORDER BY subject_code_id, predicate, text, source, value");
  stmt.bind_all(run_id);
  std::vector<AssessmentRecord> out;
  while (stmt.step()) {
    AssessmentRecord r{run_id, stmt.column_text(0), stmt.column_text(1), stmt.column_text(2),
                       std::nullopt, stmt.column_text(4)};
    if (!stmt.is_null(3)) r.value = stmt.column_double(3);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// caches

std::optional<double> Store::cached_beceptivity(const std::string& text, const std::string& model_id,
                                                double scale_max) {
  Lock lock(mu_);
  auto stmt = db_->prepare(
      "SELECT value FROM beceptivity_cache WHERE text = ? AND model_id = ? AND scale_max = ?");
  stmt.bind_all(text, model_id, scale_max);
  if (!stmt.step()) return std::nullopt;
  return stmt.column_double(0);
}

void Store::cache_beceptivity(const std::string& text, const std::string& model_id, double scale_max,
                              double value) {
  Lock lock(mu_);
  db_->prepare(
         "INSERT OR IGNORE INTO beceptivity_cache(text, model_id, scale_max, value) VALUES (?,?,?,?)")
      .bind_all(text, model_id, scale_max, value)
      .run();
}

std::optional<std::vector<std::string>> Store::cached_expansion(const std::string& source_text,
                                                                const std::string& style,
                                                                const std::string& model_id) {
  Lock lock(mu_);
  auto stmt = db_->prepare(
      "SELECT generated FROM expansions WHERE source_text = ? AND style = ? AND model_id = ?");
  stmt.bind_all(source_text, style, model_id);
  if (!stmt.step()) return std::nullopt;
  return json::parse(stmt.column_text(0)).get<std::vector<std::string>>();
}

std::vector<std::string> Store::store_expansion(const std::string& source_text,
                                                const std::string& style,
                                                const std::string& model_id,
                                                const std::vector<std::string>& generated) {
  Lock lock(mu_);
  db_->prepare(
         "INSERT OR IGNORE INTO expansions(source_text, style, model_id, generated) VALUES (?,?,?,?)")
      .bind_all(source_text, style, model_id, json(generated).dump())
      .run();
  return *cached_expansion(source_text, style, model_id);
}

std::vector<std::pair<std::string, std::vector<std::string>>> Store::expansions_of(
    const std::string& source_text, const std::string& model_id,
    const std::optional<std::string>& style) {
  Lock lock(mu_);
  auto stmt = db_->prepare(
      "SELECT style, generated FROM expansions WHERE source_text = ? AND model_id = ? "
      "AND (? IS NULL OR style = ?) ORDER BY style");
  stmt.bind_all(source_text, model_id, style, style);
  std::vector<std::pair<std::string, std::vector<std::string>>> out;
  while (stmt.step())
    out.emplace_back(stmt.column_text(0),
                     json::parse(stmt.column_text(1)).get<std::vector<std::string>>());
  return out;
}

// ---------------------------------------------------------------------------
// hierarchies

void Store::import_hierarchy(const std::string& name, std::span<const HierarchyEdge> edges) {
  std::map<std::string, std::optional<std::string>> parent_of;
  std::map<std::string, std::string> display;
  for (const auto& e : edges) {
    auto key = normalize_term(e.term);
    if (key.empty()) throw Error(ErrorCode::kInvalidArgument, "hierarchy term is empty");
    auto parent = e.parent ? std::optional(normalize_term(*e.parent)) : std::nullopt;
    if (parent && parent->empty()) parent.reset();
    if (auto [it, inserted] = parent_of.emplace(key, parent); !inserted && it->second != parent)
      throw Error(ErrorCode::kInvalidArgument, "hierarchy term '" + e.term + "' has two parents");
    display.emplace(key, std::string(text::trim(e.term)));
    if (parent) {
      parent_of.emplace(*parent, std::nullopt);
      display.emplace(*parent, std::string(text::trim(*e.parent)));
    }
  }
  // Reject cycles.
  for (const auto& [term, _] : parent_of) {
    std::set<std::string> seen{term};
    auto p = parent_of[term];
    while (p) {
      if (!seen.insert(*p).second)
        throw Error(ErrorCode::kInvalidArgument, "hierarchy has a cycle through '" + *p + "'");
      p = parent_of[*p];
    }
  }
  Lock lock(mu_);
  sql::Transaction tx(*db_);
  db_->prepare("DELETE FROM hierarchy WHERE name = ?").bind_all(name).run();
  auto insert = db_->prepare("INSERT INTO hierarchy(name, term, term_key, parent_key) VALUES (?,?,?,?)");
  for (const auto& [key, parent] : parent_of) {
    insert.reset();
    insert.bind_all(name, display[key], key, parent).run();
  }
  tx.commit();
}

std::optional<Store::HierarchyPosition> Store::hierarchy_position(const std::string& name,
                                                                  const std::string& term) {
  Lock lock(mu_);
  std::map<std::string, std::optional<std::string>> parent_of;
  auto stmt = db_->prepare("SELECT term_key, parent_key FROM hierarchy WHERE name = ?");
  stmt.bind_all(name);
  while (stmt.step()) parent_of.emplace(stmt.column_text(0), stmt.column_optional_text(1));
  auto key = normalize_term(term);
  if (!parent_of.count(key)) return std::nullopt;

  auto depth_and_root = [&](const std::string& start) {
    int depth = 0;
    std::string node = start;
    while (auto p = parent_of[node]) {
      node = *p;
      ++depth;
    }
    return std::pair{depth, node};
  };
  auto [depth, root] = depth_and_root(key);
  int max_depth = 0;
  for (const auto& [other, _] : parent_of) {
    auto [d, r] = depth_and_root(other);
    if (r == root) max_depth = std::max(max_depth, d);
  }
  return HierarchyPosition{depth, max_depth};
}

// ---------------------------------------------------------------------------
// matches

StoredMatch Store::load_match_locked(const std::string& fingerprint) {
  auto q = db_->prepare(
      "SELECT object_string, code_set_id, z, n, selection FROM match_queries WHERE fingerprint = ?");
  q.bind_all(fingerprint);
  if (!q.step()) not_found("match " + fingerprint + " not found");
  StoredMatch m;
  m.fingerprint = fingerprint;
  m.object_string = q.column_text(0);
  m.code_set_id = q.column_int(1);
  m.z = q.column_double(2);
  m.n = static_cast<int>(q.column_int(3));
  m.selection = q.column_text(4);
  auto rows = db_->prepare("SELECT code_id, distance FROM matches WHERE fingerprint = ? ORDER BY rank");
  rows.bind_all(fingerprint);
  while (rows.step()) m.ranked.push_back({rows.column_text(0), rows.column_double(1)});
  return m;
}

std::optional<StoredMatch> Store::find_match(const std::string& fingerprint) {
  Lock lock(mu_);
  auto q = db_->prepare("SELECT 1 FROM match_queries WHERE fingerprint = ?");
  q.bind_all(fingerprint);
  if (!q.step()) return std::nullopt;
  return load_match_locked(fingerprint);
}

void Store::save_match(const StoredMatch& match) {
  Lock lock(mu_);
  sql::Transaction tx(*db_);
  auto seq_stmt = db_->prepare("SELECT COALESCE(MAX(seq), 0) + 1 FROM match_queries");
  seq_stmt.step();
  auto seq = seq_stmt.column_int(0);
  db_->prepare("DELETE FROM matches WHERE fingerprint = ?").bind_all(match.fingerprint).run();
  db_->prepare(
         "INSERT OR REPLACE INTO match_queries(fingerprint, object_string, code_set_id, z, n, "
         "selection, seq) VALUES (?,?,?,?,?,?,?)")
      .bind_all(match.fingerprint, match.object_string, match.code_set_id, match.z, match.n,
                match.selection, seq)
      .run();
  auto insert = db_->prepare("INSERT INTO matches(fingerprint, rank, code_id, distance) VALUES (?,?,?,?)");
  for (std::size_t i = 0; i < match.ranked.size(); ++i) {
    insert.reset();
    insert.bind_all(match.fingerprint, static_cast<std::int64_t>(i + 1), match.ranked[i].code_id,
                    match.ranked[i].distance)
        .run();
  }
  tx.commit();
}

std::optional<StoredMatch> Store::latest_match_for(const std::string& object_string,
                                                   std::optional<Id> code_set_id) {
  Lock lock(mu_);
  auto q = db_->prepare(
      "SELECT fingerprint FROM match_queries WHERE object_string = ? AND (? IS NULL OR code_set_id = ?) "
      "ORDER BY seq DESC LIMIT 1");
  q.bind(1, object_string);
  if (code_set_id) {
    q.bind(2, *code_set_id);
    q.bind(3, *code_set_id);
  } else {
    q.bind_null(2);
    q.bind_null(3);
  }
  if (!q.step()) return std::nullopt;
  return load_match_locked(q.column_text(0));
}

std::vector<StoredMatch> Store::all_matches() {
  Lock lock(mu_);
  std::vector<std::string> fingerprints;
  auto q = db_->prepare("SELECT fingerprint FROM match_queries ORDER BY object_string, fingerprint");
  while (q.step()) fingerprints.push_back(q.column_text(0));
  std::vector<StoredMatch> out;
  for (const auto& f : fingerprints) out.push_back(load_match_locked(f));
  return out;
}

// ---------------------------------------------------------------------------
// custom tables

CustomTable Store::materialize_custom_table(const std::string& name, const std::string& query) {
  if (text::trim(name).empty()) throw Error(ErrorCode::kInvalidArgument, "custom table name is empty");
  if (text::trim(query).empty()) throw QueryError("empty query", 0);
  Lock lock(mu_);

  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  sqlite3_set_authorizer(db_->handle(), read_only_authorizer, nullptr);
  int rc = sqlite3_prepare_v2(db_->handle(), query.c_str(), static_cast<int>(query.size()), &raw, &tail);
  sqlite3_set_authorizer(db_->handle(), nullptr, nullptr);
  if (rc != SQLITE_OK) {
    std::string message = db_->error_message();
    sqlite3_finalize(raw);
    throw QueryError(message, error_offset(query, message));
  }
  sql::Statement stmt(db_->handle(), raw);
  if (!raw) throw QueryError("query contains no statement", 0);
  if (tail && !text::trim(tail).empty()) {
    std::string_view rest = tail;
    if (!(text::trim(rest) == ";"))
      throw QueryError("only a single statement is allowed",
                       static_cast<std::size_t>(tail - query.c_str()));
  }
  if (!sqlite3_stmt_readonly(raw)) throw QueryError("query must be read-only", 0);

  CustomTable table;
  table.name = name;
  table.defining_query = query;
  table.created_at = now_timestamp();
  for (int i = 0; i < stmt.column_count(); ++i) table.columns.push_back(stmt.column_name(i));
  try {
    while (stmt.step()) {
      std::vector<Cell> row;
      for (int i = 0; i < stmt.column_count(); ++i) row.push_back(column_cell(stmt, i));
      table.rows.push_back(std::move(row));
    }
  } catch (const Error& e) {
    throw QueryError(e.what(), 0);
  }

  sql::Transaction tx(*db_);
  auto v = db_->prepare("SELECT COALESCE(MAX(version), 0) + 1 FROM custom_tables WHERE name = ?");
  v.bind_all(name);
  v.step();
  table.version = static_cast<int>(v.column_int(0));
  db_->prepare("INSERT INTO custom_tables(name, version, query, columns, created_at) VALUES (?,?,?,?,?)")
      .bind_all(name, table.version, query, json(table.columns).dump(), table.created_at)
      .run();
  auto insert = db_->prepare(
      "INSERT INTO custom_table_rows(name, version, row_index, cells) VALUES (?,?,?,?)");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    json cells = json::array();
    for (const auto& cell : table.rows[r]) cells.push_back(cell ? json(*cell) : json(nullptr));
    insert.reset();
    insert.bind_all(name, table.version, static_cast<std::int64_t>(r), cells.dump()).run();
  }
  tx.commit();
  return table;
}

CustomTable Store::get_custom_table(const std::string& name, std::optional<int> version) {
  Lock lock(mu_);
  auto stmt = version ? db_->prepare(
                            "SELECT version, query, columns, created_at FROM custom_tables "
                            "WHERE name = ? AND version = ?")
                      : db_->prepare(
                            "SELECT version, query, columns, created_at FROM custom_tables "
                            "WHERE name = ? ORDER BY version DESC LIMIT 1");
  stmt.bind(1, name);
  if (version) stmt.bind(2, *version);
  if (!stmt.step()) not_found("custom table '" + name + "' not found");
  CustomTable table;
  table.name = name;
  table.version = static_cast<int>(stmt.column_int(0));
  table.defining_query = stmt.column_text(1);
  table.columns = json::parse(stmt.column_text(2)).get<std::vector<std::string>>();
  table.created_at = stmt.column_text(3);
  auto rows = db_->prepare(
      "SELECT cells FROM custom_table_rows WHERE name = ? AND version = ? ORDER BY row_index");
  rows.bind_all(name, table.version);
  while (rows.step()) {
    std::vector<Cell> row;
    for (const auto& cell : json::parse(rows.column_text(0)))
      row.push_back(cell.is_null() ? Cell{} : Cell{cell.get<std::string>()});
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// jobs

JobRecord Store::create_job(const std::string& kind, const std::optional<std::string>& idempotency_key,
                            const std::string& request_json) {
  Lock lock(mu_);
  db_->prepare("INSERT INTO jobs(kind, status, idempotency_key, request, created_at) VALUES (?,?,?,?,?)")
      .bind_all(kind, std::string(job_status_name(JobStatus::kQueued)), idempotency_key, request_json,
                now_timestamp())
      .run();
  return get_job(db_->last_insert_rowid());
}

std::optional<JobRecord> Store::find_job_by_key(const std::string& idempotency_key) {
  Lock lock(mu_);
  auto stmt = db_->prepare("SELECT id FROM jobs WHERE idempotency_key = ?");
  stmt.bind_all(idempotency_key);
  if (!stmt.step()) return std::nullopt;
  return get_job(stmt.column_int(0));
}

JobRecord Store::get_job(Id id) {
  Lock lock(mu_);
  auto stmt = db_->prepare(
      "SELECT kind, status, done, total, result_ref, error, idempotency_key FROM jobs WHERE id = ?");
  stmt.bind_all(id);
  if (!stmt.step()) not_found("job " + std::to_string(id) + " not found");
  JobRecord job;
  job.id = id;
  job.kind = stmt.column_text(0);
  job.status = parse_job_status(stmt.column_text(1));
  job.done = stmt.column_int(2);
  job.total = stmt.column_int(3);
  job.result_ref = stmt.column_text(4);
  job.error = stmt.column_text(5);
  job.idempotency_key = stmt.column_optional_text(6);
  return job;
}

void Store::update_job(const JobRecord& job) {
  Lock lock(mu_);
  db_->prepare("UPDATE jobs SET status = ?, done = ?, total = ?, result_ref = ?, error = ? WHERE id = ?")
      .bind_all(std::string(job_status_name(job.status)), job.done, job.total, job.result_ref,
                job.error, job.id)
      .run();
}

std::size_t Store::fail_unfinished_jobs(const std::string& reason) {
  Lock lock(mu_);
  db_->prepare("UPDATE jobs SET status = ?, error = ? WHERE status IN (?, ?)")
      .bind_all(std::string(job_status_name(JobStatus::kFailed)), reason,
                std::string(job_status_name(JobStatus::kQueued)),
                std::string(job_status_name(JobStatus::kRunning)))
      .run();
  return static_cast<std::size_t>(db_->changes());
}

// ---------------------------------------------------------------------------
// export

std::string Store::export_logical() {
  static const std::vector<std::pair<std::string, std::string>> kSections = {
      {"terminologies", "SELECT id, name FROM terminologies ORDER BY id"},
      {"codes", "SELECT terminology_id, code_id, main_string FROM codes ORDER BY 1, 2"},
      {"strings", "SELECT terminology_id, code_id, text, source_rank FROM strings ORDER BY 1, 2, 3"},
      {"code_sets",
       "SELECT id, name, terminology_id, filter, expansion_style, version FROM code_sets ORDER BY id"},
      {"code_set_members", "SELECT code_set_id, code_id FROM code_set_members ORDER BY 1, 2"},
      {"runs",
       "SELECT id, code_set_id, spec_ids, status, prompt_tokens, completion_tokens, cost, report "
       "FROM runs ORDER BY id"},
      {"triples",
       "SELECT run_id, subject_code_id, predicate, object_value, object_kind, finalization, "
       "replaced_parent FROM triples ORDER BY 1, 2, 3, 4"},
      {"refinements",
       "SELECT run_id, subject_code_id, predicate, parent, child, depth FROM refinements "
       "ORDER BY 1, 2, 3, 4, 5, 6"},
      {"assessments",
       "SELECT run_id, subject_code_id, predicate, text, value, source FROM assessments "
       "ORDER BY 1, 2, 3, 4, 5, 6"},
      {"beceptivity_cache",
       "SELECT text, model_id, scale_max, value FROM beceptivity_cache ORDER BY 1, 2, 3"},
      {"expansions",
       "SELECT source_text, style, model_id, generated FROM expansions ORDER BY 1, 2, 3"},
      {"hierarchy", "SELECT name, term, term_key, parent_key FROM hierarchy ORDER BY 1, 3"},
      {"vectors",
       "SELECT owner, model_id, kind, dimension, data FROM vectors ORDER BY 1, 2, 3"},
      {"match_queries",
       "SELECT fingerprint, object_string, code_set_id, z, n, selection FROM match_queries "
       "ORDER BY 1"},
      {"matches", "SELECT fingerprint, rank, code_id, distance FROM matches ORDER BY 1, 2"},
      {"custom_tables",
       "SELECT name, version, query, columns FROM custom_tables ORDER BY 1, 2"},
      {"custom_table_rows",
       "SELECT name, version, row_index, cells FROM custom_table_rows ORDER BY 1, 2, 3"},
  };
  Lock lock(mu_);
  std::string out = fmt::format("termgraph-export v{}\n", kFormatVersion);
  for (const auto& [title, query] : kSections) {
    out += "[" + title + "]\n";
    auto stmt = db_->prepare(query);
    while (stmt.step()) {
      json row = json::array();
      for (int i = 0; i < stmt.column_count(); ++i) row.push_back(column_json(stmt, i));
      out += row.dump() + "\n";
    }
  }
  return out;
}

std::string Store::export_hash() { return hash::sha256_hex(export_logical()); }

// ---------------------------------------------------------------------------
// vectors

std::optional<embed::EmbeddingVector> Store::load_vector(const std::string& owner,
                                                         const std::string& model_id,
                                                         embed::VectorKind kind) {
  Lock lock(mu_);
  auto stmt = db_->prepare("SELECT data FROM vectors WHERE owner = ? AND model_id = ? AND kind = ?");
  stmt.bind_all(owner, model_id, std::string(embed::vector_kind_name(kind)));
  if (!stmt.step()) return std::nullopt;
  return embed::EmbeddingVector{stmt.column_doubles(0), model_id, kind, owner};
}

embed::EmbeddingVector Store::store_vector_if_absent(const embed::EmbeddingVector& vector) {
  Lock lock(mu_);
  db_->prepare(
         "INSERT OR IGNORE INTO vectors(owner, model_id, kind, dimension, data) VALUES (?,?,?,?,?)")
      .bind_all(vector.owner, vector.model_id, std::string(embed::vector_kind_name(vector.kind)),
                static_cast<std::int64_t>(vector.values.size()))
      .bind_blob(5, vector.values.data(), static_cast<int>(vector.values.size() * sizeof(double)))
      .run();
  return *load_vector(vector.owner, vector.model_id, vector.kind);
}

std::size_t Store::vector_count() {
  Lock lock(mu_);
  auto stmt = db_->prepare("SELECT COUNT(*) FROM vectors");
  stmt.step();
  return static_cast<std::size_t>(stmt.column_int(0));
}

}  // namespace termgraph::store
