#pragma once

#include <condition_variable>
#include <chrono>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "termgraph/store/store.hpp"

namespace termgraph::service {

// Job kinds used by the service.
inline constexpr const char* kJobTerminologyImport = "terminology_import";
inline constexpr const char* kJobCodeSet = "code_set";
inline constexpr const char* kJobRelationshipRun = "relationship_run";
inline constexpr const char* kJobMatchBatch = "match_batch";
inline constexpr const char* kJobCustomTable = "custom_table";

struct JobOutcome {
  store::JobStatus status = store::JobStatus::kSucceeded;
  std::string result_ref;
  // Recorded with a failed outcome.
  std::string error;
};

class JobContext {
 public:
  // Progress never moves backwards; smaller values are ignored.
  void progress(std::int64_t done, std::int64_t total);
  // Set early so clients can follow the result while the job runs.
  void set_result_ref(const std::string& ref);

 private:
  friend class JobManager;
  JobContext(class JobManager& manager, store::Id id) : manager_(manager), id_(id) {}
  JobManager& manager_;
  store::Id id_;
};

using JobTask = std::function<JobOutcome(JobContext&)>;

struct Submission {
  store::JobRecord job;
  // True when the idempotency key named an existing job; the task was not
  // queued again.
  bool deduplicated = false;
};

// Runs mutations asynchronously on a fixed pool and journals them in the
// store's job table. A terminal status is never overwritten. Exceptions
// from a task fail the job with "<ErrorCode>: <message>".
class JobManager {
 public:
  JobManager(store::Store& store, std::size_t threads = 2);
  // Finishes queued and running jobs, then joins.
  ~JobManager();

  Submission submit(const std::string& kind, const std::optional<std::string>& idempotency_key,
                    const std::string& request_json, JobTask task);
  store::JobRecord get(store::Id id);
  // Blocks until the job is terminal or the timeout passes; returns the
  // latest record either way.
  store::JobRecord wait(store::Id id, std::chrono::milliseconds timeout);

 private:
  friend class JobContext;
  void worker();
  void execute(store::Id id, JobTask& task);
  void update(store::Id id, const std::function<void(store::JobRecord&)>& change);

  store::Store& store_;
  std::mutex mu_;
  std::condition_variable queue_cv_;
  std::condition_variable done_cv_;
  std::deque<std::pair<store::Id, JobTask>> queue_;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

bool is_terminal(store::JobStatus status);

}  // namespace termgraph::service
