#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace termgraph::llm {

// Exact decimal currency amount with twelve fractional digits. Per-token
// prices of commercial models sit well below a cent, so binary floating point
// would make the budget comparison drift.
class Money {
 public:
  static constexpr int kScaleDigits = 12;
  static constexpr std::int64_t kUnitsPerDollar = 1'000'000'000'000;

  constexpr Money() = default;

  static constexpr Money from_units(std::int64_t units) { return Money(units); }

  // Accepts "[-]digits[.digits]". Throws Error(kAccountingError) when the
  // text is malformed or has more fractional digits than kScaleDigits.
  static Money parse(std::string_view text);

  std::int64_t units() const noexcept { return units_; }

  // Canonical text: at least two fractional digits, trailing zeros trimmed.
  std::string to_string() const;

  Money operator+(Money other) const;
  Money operator-(Money other) const;
  Money& operator+=(Money other);
  // Throws Error(kAccountingError) on overflow.
  Money times(std::int64_t count) const;

  auto operator<=>(const Money&) const = default;

 private:
  explicit constexpr Money(std::int64_t units) : units_(units) {}

  std::int64_t units_ = 0;
};

}  // namespace termgraph::llm
