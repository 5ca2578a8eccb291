#pragma once

#include <cstdint>
#include <mutex>
#include <optional>

#include "termgraph/llm/money.hpp"

namespace termgraph::llm {

struct TokenUsage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct Pricing {
  Money per_prompt_token;
  Money per_completion_token;
};

enum class BudgetDecision { kContinue, kKill };

struct LedgerSnapshot {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  Money accumulated_cost;
  bool killed = false;
};

// Token and dollar accounting for a single run. All methods are linearizable;
// once the limit is exceeded the ledger stays killed and every worker sees it
// through dispatch_allowed() before starting another request.
class CostLedger {
 public:
  CostLedger(Pricing pricing, std::optional<Money> dollar_limit);

  // Adds usage and returns kKill exactly when the accumulated cost is
  // strictly greater than the limit. Negative counts throw kAccountingError
  // and leave the ledger unchanged.
  BudgetDecision record_usage(const TokenUsage& usage);

  bool dispatch_allowed() const;

  // Cost of a hypothetical response; used for the overshoot bound.
  Money cost_of(const TokenUsage& usage) const;

  LedgerSnapshot snapshot() const;
  const Pricing& pricing() const noexcept { return pricing_; }
  const std::optional<Money>& dollar_limit() const noexcept { return limit_; }

 private:
  Pricing pricing_;
  std::optional<Money> limit_;

  mutable std::mutex mu_;
  std::int64_t prompt_tokens_ = 0;
  std::int64_t completion_tokens_ = 0;
  bool killed_ = false;
};

}  // namespace termgraph::llm
