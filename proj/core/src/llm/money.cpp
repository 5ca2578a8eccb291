#include "termgraph/llm/money.hpp"

#include <limits>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::llm {

namespace {
[[noreturn]] void bad_amount(std::string_view text, const char* why) {
  throw Error(ErrorCode::kAccountingError,
              "invalid currency amount '" + std::string(text) + "': " + why);
}

std::int64_t checked(__int128 value) {
  if (value > std::numeric_limits<std::int64_t>::max() ||
      value < std::numeric_limits<std::int64_t>::min())
    throw Error(ErrorCode::kAccountingError, "currency amount overflow");
  return static_cast<std::int64_t>(value);
}
}  // namespace

Money Money::parse(std::string_view text) {
  std::string_view s = text::trim(text);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  if (s.empty()) bad_amount(text, "empty");
  __int128 whole = 0;
  __int128 frac = 0;
  int frac_digits = 0;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_dot) bad_amount(text, "two decimal points");
      seen_dot = true;
      continue;
    }
    if (c < '0' || c > '9') bad_amount(text, "unexpected character");
    seen_digit = true;
    if (seen_dot) {
      if (++frac_digits > kScaleDigits) bad_amount(text, "too many fractional digits");
      frac = frac * 10 + (c - '0');
    } else {
      whole = whole * 10 + (c - '0');
      if (whole > std::numeric_limits<std::int64_t>::max()) bad_amount(text, "overflow");
    }
  }
  if (!seen_digit) bad_amount(text, "no digits");
  for (int i = frac_digits; i < kScaleDigits; ++i) frac *= 10;
  __int128 units = whole * kUnitsPerDollar + frac;
  return Money(checked(negative ? -units : units));
}

std::string Money::to_string() const {
  __int128 u = units_;
  bool negative = u < 0;
  if (negative) u = -u;
  auto whole = static_cast<std::uint64_t>(u / kUnitsPerDollar);
  auto frac = static_cast<std::uint64_t>(u % kUnitsPerDollar);
  std::string frac_text = std::to_string(frac);
  frac_text.insert(0, kScaleDigits - frac_text.size(), '0');
  while (frac_text.size() > 2 && frac_text.back() == '0') frac_text.pop_back();
  return (negative ? "-" : "") + std::to_string(whole) + "." + frac_text;
}

Money Money::operator+(Money other) const {
  return Money(checked(static_cast<__int128>(units_) + other.units_));
}

Money Money::operator-(Money other) const {
  return Money(checked(static_cast<__int128>(units_) - other.units_));
}

Money& Money::operator+=(Money other) {
  *this = *this + other;
  return *this;
}

Money Money::times(std::int64_t count) const {
  return Money(checked(static_cast<__int128>(units_) * count));
}

}  // namespace termgraph::llm
