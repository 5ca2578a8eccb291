#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "termgraph/store/types.hpp"

namespace termgraph::store {

// Declarative membership test over codes, persisted as its source text.
//
//   filter    := or_expr
//   or_expr   := and_expr ("or" and_expr)*
//   and_expr  := unary ("and" unary)*
//   unary     := "not" unary | "(" filter ")" | "all" | predicate
//   predicate := field op value
//   field     := code_id | string | main_string
//   op        := "=" | "!=" | starts_with | ends_with | contains | in
//   value     := "quoted" | ("quoted", ...)         -- list only after `in`
//
// code_id comparisons are case-sensitive. `string` is true when any of the
// code's strings satisfies the test; string comparisons ignore case.
// Examples:
//   code_id starts_with "D"
//   string contains "fracture" and not code_id in ("S01", "S02")
class CodeFilter {
 public:
  // Throws QueryError with the offset of the offending token.
  static CodeFilter parse(std::string_view source);

  bool matches(const Code& code) const;
  const std::string& source() const noexcept { return source_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace termgraph::store
