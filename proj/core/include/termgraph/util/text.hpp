#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace termgraph::text {

std::string_view trim(std::string_view s);

// Trims, then replaces every internal run of whitespace with one space.
std::string collapse_whitespace(std::string_view s);

std::string to_lower(std::string_view s);

std::vector<std::string> split(std::string_view s, char delimiter);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);

// Shortest decimal text that parses back to exactly `value`.
std::string format_number(double value);

// Parses a finite number, tolerating surrounding whitespace and a trailing '%'.
std::optional<double> parse_number(std::string_view s);

}  // namespace termgraph::text
