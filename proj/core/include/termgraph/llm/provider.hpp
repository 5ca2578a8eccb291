#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <string>

#include "termgraph/llm/cost_ledger.hpp"
#include "termgraph/llm/schema.hpp"

namespace termgraph::llm {

struct RequestOptions {
  std::string model;
  double temperature = 0.0;
  int max_tokens = 0;  // 0: provider default
  // Index of an independent repeat of the same prompt (0 for the first
  // sample). Live providers ignore it; replay uses it to pick a recording.
  int sample_index = 0;
};

struct ProviderResponse {
  std::string text;
  TokenUsage usage;
};

// A language model endpoint. Implementations must be safe to call from
// several workers at once.
class Provider {
 public:
  virtual ~Provider() = default;

  // Throws TransientProviderError for failures worth retrying and Error for
  // permanent ones.
  virtual ProviderResponse send(const std::string& prompt, const RequestOptions& options) = 0;
  virtual ProviderCapabilities capabilities() const = 0;
  virtual std::string model_id() const = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
};

struct GatewayResult {
  enum class Status { kOk, kBudgetKilled, kFailed };
  Status status = Status::kFailed;
  ProviderResponse response;
  std::string error;
  int attempts = 0;
  // The ledger crossed its limit while billing this call; the response (if
  // any) is still valid and should be processed.
  bool kill_triggered = false;
};

// Front door for every model call: checks the ledger before each dispatch,
// retries transient failures with exponential backoff, and bills every
// attempt, including failed ones that report usage.
class Gateway {
 public:
  Gateway(Provider& provider, RequestOptions defaults, RetryPolicy retry = {});

  GatewayResult call(const std::string& prompt, CostLedger& ledger, int sample_index = 0);

  Provider& provider() noexcept { return provider_; }
  ProviderCapabilities capabilities() const { return provider_.capabilities(); }
  std::string model_id() const { return provider_.model_id(); }
  const RequestOptions& defaults() const noexcept { return defaults_; }

  long dispatched_calls() const noexcept { return dispatched_.load(); }

  // Replaces the sleep between retries (tests use a no-op).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
    sleeper_ = std::move(sleeper);
  }

 private:
  Provider& provider_;
  RequestOptions defaults_;
  RetryPolicy retry_;
  std::atomic<long> dispatched_{0};
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

}  // namespace termgraph::llm
