#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "termgraph/embed/embedding_service.hpp"
#include "termgraph/store/code_filter.hpp"
#include "termgraph/store/types.hpp"

namespace termgraph::store {

namespace sql {
class Database;
}

// Embedded single-file store (SQLite) for terminologies, code sets, runs,
// triples, vectors, caches, matches and custom tables. Pass ":memory:" for a
// throwaway store.
//
// All public methods are thread-safe. Calls are serialized on one
// connection; each mutating call is one transaction.
class Store : public embed::VectorRepository {
 public:
  static constexpr int kFormatVersion = 1;

  explicit Store(const std::string& path);
  ~Store() override;
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // --- terminologies ------------------------------------------------------

  // Groups rows into codes, dropping duplicate (code_id, text) pairs.
  // Importing into an existing terminology name merges, so repeating an
  // import leaves the content unchanged. Throws kImportEmpty for an empty
  // stream or one where every row was rejected.
  ImportReport import_terminology(const std::string& name, std::span<const ImportRow> rows);
  Terminology get_terminology(Id id);
  std::optional<Terminology> find_terminology(const std::string& name);
  std::vector<Terminology> list_terminologies();
  std::optional<Code> find_code(Id terminology_id, const std::string& code_id);

  // --- code sets ----------------------------------------------------------

  // Throws kNotFound for an unknown terminology and kInvalidArgument for a
  // duplicate name. An empty result is allowed and sets empty_warning.
  CodeSet create_code_set(Id terminology_id, const std::string& name, const CodeFilter& filter,
                          std::optional<std::string> expansion_style = std::nullopt);
  CodeSet get_code_set(Id id);
  std::optional<CodeSet> find_code_set(const std::string& name);
  std::vector<CodeSet> list_code_sets();
  std::vector<Code> code_set_members(Id code_set_id);

  // --- runs and triples ---------------------------------------------------

  Run create_run(Id code_set_id, const std::vector<std::string>& spec_ids);
  // pending -> running; throws kRunClosed from any other state.
  void start_run(Id run_id);
  // running -> terminal; throws kRunClosed if the run is not running.
  void finish_run(Id run_id, RunStatus status, std::int64_t prompt_tokens,
                  std::int64_t completion_tokens, const std::string& cost,
                  const std::string& report_json);
  Run get_run(Id run_id);
  std::vector<Run> list_runs();

  // Atomic per call. Duplicates of stored triples (or within the batch) are
  // skipped. Throws kRunClosed unless the run is running and
  // kInvalidArgument for a numeric triple whose object is not a finite
  // number; nothing is written in either case.
  std::size_t insert_triples(Id run_id, std::span<const Triple> triples);
  std::vector<Triple> triples_for_run(Id run_id);
  std::vector<Triple> all_triples();

  void record_refinements(std::span<const RefinementRecord> records);
  std::vector<RefinementRecord> refinements_for_run(Id run_id);
  void record_assessments(std::span<const AssessmentRecord> records);
  std::vector<AssessmentRecord> assessments_for_run(Id run_id);

  // --- caches -------------------------------------------------------------

  std::optional<double> cached_beceptivity(const std::string& text, const std::string& model_id,
                                           double scale_max);
  void cache_beceptivity(const std::string& text, const std::string& model_id, double scale_max,
                         double value);

  std::optional<std::vector<std::string>> cached_expansion(const std::string& source_text,
                                                           const std::string& style,
                                                           const std::string& model_id);
  // First write wins; returns the stored expansion.
  std::vector<std::string> store_expansion(const std::string& source_text, const std::string& style,
                                           const std::string& model_id,
                                           const std::vector<std::string>& generated);
  // Every cached expansion of `source_text` for the model, across styles
  // (or for one style when given).
  std::vector<std::pair<std::string, std::vector<std::string>>> expansions_of(
      const std::string& source_text, const std::string& model_id,
      const std::optional<std::string>& style);

  // --- hierarchies --------------------------------------------------------

  void import_hierarchy(const std::string& name, std::span<const HierarchyEdge> edges);
  // Depth of the term below its root (roots are 0) and the deepest level of
  // the same tree. Term lookup ignores case. nullopt when unknown.
  struct HierarchyPosition {
    int depth = 0;
    int max_depth = 0;
  };
  std::optional<HierarchyPosition> hierarchy_position(const std::string& name, const std::string& term);

  // --- matches ------------------------------------------------------------

  std::optional<StoredMatch> find_match(const std::string& fingerprint);
  void save_match(const StoredMatch& match);
  // Most recently stored result for an object string (optionally within a
  // code set).
  std::optional<StoredMatch> latest_match_for(const std::string& object_string,
                                              std::optional<Id> code_set_id);
  std::vector<StoredMatch> all_matches();

  // --- custom tables ------------------------------------------------------

  // Runs a single read-only SELECT (SQLite dialect) against the store's
  // logical tables and stores the result as a new immutable snapshot
  // version. Throws QueryError with an offset for invalid or non-read-only
  // queries.
  CustomTable materialize_custom_table(const std::string& name, const std::string& query);
  // Latest version when version is nullopt.
  CustomTable get_custom_table(const std::string& name, std::optional<int> version = std::nullopt);

  // --- jobs ---------------------------------------------------------------

  JobRecord create_job(const std::string& kind, const std::optional<std::string>& idempotency_key,
                       const std::string& request_json);
  std::optional<JobRecord> find_job_by_key(const std::string& idempotency_key);
  JobRecord get_job(Id id);
  void update_job(const JobRecord& job);
  // Marks jobs left queued or running by an earlier process as failed.
  std::size_t fail_unfinished_jobs(const std::string& reason);

  // --- export -------------------------------------------------------------

  // Deterministic text dump of every logical table (rows sorted, no
  // timestamps, no jobs, vectors as digests). Two stores with the same
  // logical content produce byte-identical exports.
  std::string export_logical();
  std::string export_hash();

  // --- vectors (embed::VectorRepository) ---------------------------------

  std::optional<embed::EmbeddingVector> load_vector(const std::string& owner,
                                                    const std::string& model_id,
                                                    embed::VectorKind kind) override;
  embed::EmbeddingVector store_vector_if_absent(const embed::EmbeddingVector& vector) override;
  std::size_t vector_count();

 private:
  void create_schema();
  Terminology load_terminology_locked(Id id, const std::string& name);
  CodeSet load_code_set_locked(Id id);
  Run load_run_locked(Id id);
  std::vector<Triple> load_triples_locked(const std::string& where, std::optional<Id> run_id);
  StoredMatch load_match_locked(const std::string& fingerprint);

  std::unique_ptr<sql::Database> db_;
  std::recursive_mutex mu_;
};

std::string now_timestamp();

}  // namespace termgraph::store
