#include "termgraph/llm/cost_ledger.hpp"

#include "termgraph/error.hpp"

namespace termgraph::llm {

CostLedger::CostLedger(Pricing pricing, std::optional<Money> dollar_limit)
    : pricing_(pricing), limit_(dollar_limit) {
  if (pricing_.per_prompt_token < Money{} || pricing_.per_completion_token < Money{})
    throw Error(ErrorCode::kAccountingError, "token prices must be non-negative");
}

Money CostLedger::cost_of(const TokenUsage& usage) const {
  return pricing_.per_prompt_token.times(usage.prompt_tokens) +
         pricing_.per_completion_token.times(usage.completion_tokens);
}

BudgetDecision CostLedger::record_usage(const TokenUsage& usage) {
  if (usage.prompt_tokens < 0 || usage.completion_tokens < 0)
    throw Error(ErrorCode::kAccountingError, "token usage must be non-negative");
  std::lock_guard lock(mu_);
  TokenUsage next{prompt_tokens_ + usage.prompt_tokens, completion_tokens_ + usage.completion_tokens};
  // Cost is always recomputed from the counters so it equals
  // prompt_tokens*price_in + completion_tokens*price_out exactly. Computed
  // before committing so an overflow leaves the ledger unchanged.
  Money total = cost_of(next);
  prompt_tokens_ = next.prompt_tokens;
  completion_tokens_ = next.completion_tokens;
  if (limit_ && total > *limit_) killed_ = true;
  return killed_ ? BudgetDecision::kKill : BudgetDecision::kContinue;
}

bool CostLedger::dispatch_allowed() const {
  std::lock_guard lock(mu_);
  return !killed_;
}

LedgerSnapshot CostLedger::snapshot() const {
  std::lock_guard lock(mu_);
  return {prompt_tokens_, completion_tokens_, cost_of({prompt_tokens_, completion_tokens_}),
          killed_};
}

}  // namespace termgraph::llm
