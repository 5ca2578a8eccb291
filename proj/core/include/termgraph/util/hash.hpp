#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace termgraph::hash {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace termgraph::hash
