#include <thread>

#include "termgraph/error.hpp"
#include "termgraph/llm/provider.hpp"

namespace termgraph::llm {

Gateway::Gateway(Provider& provider, RequestOptions defaults, RetryPolicy retry)
    : provider_(provider), defaults_(std::move(defaults)), retry_(retry) {
  if (retry_.max_attempts < 1) retry_.max_attempts = 1;
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

GatewayResult Gateway::call(const std::string& prompt, CostLedger& ledger, int sample_index) {
  GatewayResult result;
  RequestOptions options = defaults_;
  options.sample_index = sample_index;
  auto backoff = retry_.initial_backoff;

  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    if (!ledger.dispatch_allowed()) {
      result.status = GatewayResult::Status::kBudgetKilled;
      return result;
    }
    result.attempts = attempt;
    ++dispatched_;
    try {
      result.response = provider_.send(prompt, options);
      if (ledger.record_usage(result.response.usage) == BudgetDecision::kKill)
        result.kill_triggered = true;
      result.status = GatewayResult::Status::kOk;
      return result;
    } catch (const TransientProviderError& e) {
      if (ledger.record_usage({e.prompt_tokens(), e.completion_tokens()}) ==
          BudgetDecision::kKill)
        result.kill_triggered = true;
      result.error = e.what();
    } catch (const Error& e) {
      result.error = e.what();
      result.status = GatewayResult::Status::kFailed;
      return result;
    }
    if (attempt < retry_.max_attempts) {
      sleeper_(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long>(static_cast<double>(backoff.count()) * retry_.backoff_multiplier));
    }
  }
  result.status = GatewayResult::Status::kFailed;
  return result;
}

}  // namespace termgraph::llm
