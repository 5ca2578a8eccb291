#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "termgraph/error.hpp"
#include "termgraph/llm/cost_ledger.hpp"
#include "termgraph/llm/money.hpp"

namespace termgraph::llm {
namespace {

TEST(Money, ParseAndFormat) {
  EXPECT_EQ(Money::parse("1").units(), Money::kUnitsPerDollar);
  EXPECT_EQ(Money::parse("0.000002").units(), 2'000'000);
  EXPECT_EQ(Money::parse("-0.5").to_string(), "-0.50");
  EXPECT_EQ(Money::parse("3.14159").to_string(), "3.14159");
  EXPECT_EQ(Money::parse("0.000000000001").units(), 1);
  EXPECT_EQ(Money().to_string(), "0.00");
}

TEST(Money, RejectsMalformedText) {
  for (const char* bad : {"", "abc", "1.2.3", "0.0000000000001", "1e5", "--1", "."})
    EXPECT_THROW(Money::parse(bad), Error) << bad;
}

TEST(Money, TimesOverflowThrows) {
  EXPECT_EQ(Money::parse("0.25").times(4), Money::parse("1"));
  EXPECT_THROW(Money::parse("1000").times(1'000'000'000), Error);
}

TEST(CostLedger, KillsExactlyWhenCostExceedsLimit) {
  // Oracle: integer arithmetic in units.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::int64_t> price(0, 5000), tokens(0, 400), lim(0, 2'000'000);
    Pricing pricing{Money::from_units(price(rng)), Money::from_units(price(rng))};
    auto limit = Money::from_units(lim(rng));
    CostLedger ledger(pricing, limit);
    std::int64_t total = 0;
    bool killed = false;
    for (int step = 0; step < 20; ++step) {
      TokenUsage u{tokens(rng), tokens(rng)};
      total += u.prompt_tokens * pricing.per_prompt_token.units() +
               u.completion_tokens * pricing.per_completion_token.units();
      auto decision = ledger.record_usage(u);
      bool expected_kill = total > limit.units();
      EXPECT_EQ(decision == BudgetDecision::kKill, expected_kill);
      killed = killed || expected_kill;
      EXPECT_EQ(ledger.dispatch_allowed(), !killed);
    }
    EXPECT_EQ(ledger.snapshot().accumulated_cost.units(), total);
  }
}

TEST(CostLedger, KillIsSticky) {
  CostLedger ledger({Money::parse("1"), Money()}, Money::parse("1.5"));
  EXPECT_EQ(ledger.record_usage({1, 0}), BudgetDecision::kContinue);
  EXPECT_EQ(ledger.record_usage({1, 0}), BudgetDecision::kKill);
  EXPECT_FALSE(ledger.dispatch_allowed());
  EXPECT_EQ(ledger.record_usage({0, 0}), BudgetDecision::kKill);
  EXPECT_TRUE(ledger.snapshot().killed);
}

TEST(CostLedger, EqualToLimitIsNotAKill) {
  CostLedger ledger({Money::parse("0.5"), Money()}, Money::parse("1"));
  EXPECT_EQ(ledger.record_usage({2, 0}), BudgetDecision::kContinue);
  EXPECT_TRUE(ledger.dispatch_allowed());
}

TEST(CostLedger, NoLimitNeverKills) {
  CostLedger ledger({Money::parse("0.01"), Money::parse("0.03")}, std::nullopt);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(ledger.record_usage({1000, 1000}), BudgetDecision::kContinue);
}

TEST(CostLedger, OverflowLeavesLedgerUnchanged) {
  CostLedger ledger({Money::parse("1000"), Money()}, std::nullopt);
  ledger.record_usage({5, 0});
  EXPECT_THROW(ledger.record_usage({1'000'000'000, 0}), Error);
  EXPECT_EQ(ledger.snapshot().prompt_tokens, 5);
  EXPECT_EQ(ledger.snapshot().accumulated_cost, Money::parse("5000"));
}

TEST(CostLedger, NegativeUsageIsRejectedAndIgnored) {
  CostLedger ledger({Money::parse("1"), Money::parse("1")}, std::nullopt);
  ledger.record_usage({2, 3});
  EXPECT_THROW(ledger.record_usage({-1, 0}), Error);
  auto snap = ledger.snapshot();
  EXPECT_EQ(snap.prompt_tokens, 2);
  EXPECT_EQ(snap.completion_tokens, 3);
}

TEST(CostLedger, ConcurrentUpdatesAreNotLost) {
  CostLedger ledger({Money::from_units(3), Money::from_units(5)}, std::nullopt);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      for (int i = 0; i < 1000; ++i) ledger.record_usage({1, 2});
    });
  for (auto& t : threads) t.join();
  auto snap = ledger.snapshot();
  EXPECT_EQ(snap.prompt_tokens, 8000);
  EXPECT_EQ(snap.completion_tokens, 16000);
  EXPECT_EQ(snap.accumulated_cost.units(), 8000 * 3 + 16000 * 5);
}

}  // namespace
}  // namespace termgraph::llm
