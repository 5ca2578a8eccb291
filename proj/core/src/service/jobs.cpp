#include "termgraph/service/jobs.hpp"

#include "termgraph/error.hpp"

namespace termgraph::service {

bool is_terminal(store::JobStatus status) {
  return status != store::JobStatus::kQueued && status != store::JobStatus::kRunning;
}

void JobContext::progress(std::int64_t done, std::int64_t total) {
  manager_.update(id_, [&](store::JobRecord& job) {
    if (total > job.total) job.total = total;
    if (done > job.done) job.done = done;
  });
}

void JobContext::set_result_ref(const std::string& ref) {
  manager_.update(id_, [&](store::JobRecord& job) { job.result_ref = ref; });
}

JobManager::JobManager(store::Store& store, std::size_t threads) : store_(store) {
  if (threads == 0) threads = 1;
  for (std::size_t i = 0; i < threads; ++i) threads_.emplace_back([this] { worker(); });
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  queue_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

Submission JobManager::submit(const std::string& kind,
                              const std::optional<std::string>& idempotency_key,
                              const std::string& request_json, JobTask task) {
  std::lock_guard lock(mu_);
  if (stopping_) throw Error(ErrorCode::kInvalidArgument, "job manager is shutting down");
  if (idempotency_key)
    if (auto existing = store_.find_job_by_key(*idempotency_key)) return {*existing, true};
  auto job = store_.create_job(kind, idempotency_key, request_json);
  queue_.emplace_back(job.id, std::move(task));
  queue_cv_.notify_one();
  return {job, false};
}

store::JobRecord JobManager::get(store::Id id) { return store_.get_job(id); }

store::JobRecord JobManager::wait(store::Id id, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  done_cv_.wait_for(lock, timeout, [&] { return is_terminal(store_.get_job(id).status); });
  return store_.get_job(id);
}

void JobManager::update(store::Id id, const std::function<void(store::JobRecord&)>& change) {
  std::lock_guard lock(mu_);
  auto job = store_.get_job(id);
  if (is_terminal(job.status)) return;
  change(job);
  store_.update_job(job);
}

void JobManager::worker() {
  for (;;) {
    std::pair<store::Id, JobTask> item;
    {
      std::unique_lock lock(mu_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      item = std::move(queue_.front());
      queue_.pop_front();
    }
    execute(item.first, item.second);
  }
}

void JobManager::execute(store::Id id, JobTask& task) {
  update(id, [](store::JobRecord& job) { job.status = store::JobStatus::kRunning; });
  JobContext context(*this, id);
  std::optional<JobOutcome> outcome;
  std::string error;
  try {
    outcome = task(context);
  } catch (const Error& e) {
    error = std::string(error_code_name(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    error = std::string("StorageError: ") + e.what();
  }
  update(id, [&](store::JobRecord& job) {
    if (outcome) {
      job.status = outcome->status;
      if (!outcome->result_ref.empty()) job.result_ref = outcome->result_ref;
      job.error = outcome->error;
      if (job.status == store::JobStatus::kSucceeded && job.total > 0) job.done = job.total;
    } else {
      job.status = store::JobStatus::kFailed;
      job.error = error;
    }
  });
  done_cv_.notify_all();
}

}  // namespace termgraph::service
