#include "termgraph/store/code_filter.hpp"

#include <cctype>

#include "termgraph/error.hpp"
#include "termgraph/util/text.hpp"

namespace termgraph::store {

enum class Field { kCodeId, kString, kMainString };
enum class Op { kEq, kNe, kStartsWith, kEndsWith, kContains, kIn };

struct CodeFilter::Node {
  enum class Type { kAll, kNot, kAnd, kOr, kPredicate } type = Type::kAll;
  std::vector<std::shared_ptr<const Node>> children;
  Field field = Field::kCodeId;
  Op op = Op::kEq;
  std::vector<std::string> values;
};

namespace {

using Node = CodeFilter::Node;

struct Token {
  enum class Type { kWord, kString, kLParen, kRParen, kComma, kOp, kEnd } type;
  std::string text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      tokens.push_back({Token::Type::kLParen, "(", i++});
    } else if (c == ')') {
      tokens.push_back({Token::Type::kRParen, ")", i++});
    } else if (c == ',') {
      tokens.push_back({Token::Type::kComma, ",", i++});
    } else if (c == '=') {
      tokens.push_back({Token::Type::kOp, "=", i++});
    } else if (c == '!' && i + 1 < src.size() && src[i + 1] == '=') {
      tokens.push_back({Token::Type::kOp, "!=", i});
      i += 2;
    } else if (c == '"' || c == '\'') {
      std::size_t start = i++;
      std::string value;
      while (i < src.size() && src[i] != c) {
        if (src[i] == '\\' && i + 1 < src.size()) ++i;
        value.push_back(src[i++]);
      }
      if (i >= src.size()) throw QueryError("unterminated string literal", start);
      ++i;
      tokens.push_back({Token::Type::kString, value, start});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
        ++i;
      tokens.push_back({Token::Type::kWord, text::to_lower(src.substr(start, i - start)), start});
    } else {
      throw QueryError(std::string("unexpected character '") + c + "'", i);
    }
  }
  tokens.push_back({Token::Type::kEnd, "", src.size()});
  return tokens;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  std::shared_ptr<const Node> parse() {
    auto node = parse_or();
    if (peek().type != Token::Type::kEnd) throw QueryError("unexpected '" + peek().text + "'", peek().offset);
    return node;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }
  bool accept_word(std::string_view w) {
    if (peek().type == Token::Type::kWord && peek().text == w) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::shared_ptr<const Node> parse_or() {
    auto left = parse_and();
    if (peek().type != Token::Type::kWord || peek().text != "or") return left;
    auto node = std::make_shared<Node>();
    node->type = Node::Type::kOr;
    node->children.push_back(left);
    while (accept_word("or")) node->children.push_back(parse_and());
    return node;
  }

  std::shared_ptr<const Node> parse_and() {
    auto left = parse_unary();
    if (peek().type != Token::Type::kWord || peek().text != "and") return left;
    auto node = std::make_shared<Node>();
    node->type = Node::Type::kAnd;
    node->children.push_back(left);
    while (accept_word("and")) node->children.push_back(parse_unary());
    return node;
  }

  std::shared_ptr<const Node> parse_unary() {
    if (accept_word("not")) {
      auto node = std::make_shared<Node>();
      node->type = Node::Type::kNot;
      node->children.push_back(parse_unary());
      return node;
    }
    if (peek().type == Token::Type::kLParen) {
      next();
      auto inner = parse_or();
      expect(Token::Type::kRParen, "')'");
      return inner;
    }
    if (accept_word("all")) return std::make_shared<Node>();
    return parse_predicate();
  }

  std::shared_ptr<const Node> parse_predicate() {
    const Token& field_token = next();
    auto node = std::make_shared<Node>();
    node->type = Node::Type::kPredicate;
    if (field_token.type != Token::Type::kWord)
      throw QueryError("expected a field name", field_token.offset);
    if (field_token.text == "code_id")
      node->field = Field::kCodeId;
    else if (field_token.text == "string")
      node->field = Field::kString;
    else if (field_token.text == "main_string")
      node->field = Field::kMainString;
    else
      throw QueryError("unknown field '" + field_token.text + "'", field_token.offset);

    const Token& op_token = next();
    if (op_token.type == Token::Type::kOp) {
      node->op = op_token.text == "=" ? Op::kEq : Op::kNe;
    } else if (op_token.type == Token::Type::kWord && op_token.text == "starts_with") {
      node->op = Op::kStartsWith;
    } else if (op_token.type == Token::Type::kWord && op_token.text == "ends_with") {
      node->op = Op::kEndsWith;
    } else if (op_token.type == Token::Type::kWord && op_token.text == "contains") {
      node->op = Op::kContains;
    } else if (op_token.type == Token::Type::kWord && op_token.text == "in") {
      node->op = Op::kIn;
    } else {
      throw QueryError("expected an operator", op_token.offset);
    }

    if (node->op == Op::kIn) {
      expect(Token::Type::kLParen, "'('");
      node->values.push_back(expect(Token::Type::kString, "a quoted value").text);
      while (peek().type == Token::Type::kComma) {
        next();
        node->values.push_back(expect(Token::Type::kString, "a quoted value").text);
      }
      expect(Token::Type::kRParen, "')'");
    } else {
      node->values.push_back(expect(Token::Type::kString, "a quoted value").text);
    }
    return node;
  }

  const Token& expect(Token::Type type, const char* what) {
    if (peek().type != type) throw QueryError(std::string("expected ") + what, peek().offset);
    return next();
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

bool compare(Op op, std::string_view candidate, const std::vector<std::string>& values,
             bool ignore_case) {
  std::string c = ignore_case ? text::to_lower(candidate) : std::string(candidate);
  auto norm = [&](const std::string& v) { return ignore_case ? text::to_lower(v) : v; };
  const std::string v = norm(values.front());
  switch (op) {
    case Op::kEq: return c == v;
    case Op::kNe: return c != v;
    case Op::kStartsWith: return c.compare(0, v.size(), v) == 0;
    case Op::kEndsWith: return c.size() >= v.size() && c.compare(c.size() - v.size(), v.size(), v) == 0;
    case Op::kContains: return c.find(v) != std::string::npos;
    case Op::kIn:
      for (const auto& value : values)
        if (c == norm(value)) return true;
      return false;
  }
  return false;
}

bool evaluate(const Node& node, const Code& code) {
  switch (node.type) {
    case Node::Type::kAll: return true;
    case Node::Type::kNot: return !evaluate(*node.children.front(), code);
    case Node::Type::kAnd:
      for (const auto& child : node.children)
        if (!evaluate(*child, code)) return false;
      return true;
    case Node::Type::kOr:
      for (const auto& child : node.children)
        if (evaluate(*child, code)) return true;
      return false;
    case Node::Type::kPredicate:
      switch (node.field) {
        case Field::kCodeId: return compare(node.op, code.code_id, node.values, false);
        case Field::kMainString:
          return !code.strings.empty() && compare(node.op, code.main_text(), node.values, true);
        case Field::kString:
          for (const auto& s : code.strings)
            if (compare(node.op, s.text, node.values, true)) return true;
          return false;
      }
  }
  return false;
}

}  // namespace

CodeFilter CodeFilter::parse(std::string_view source) {
  if (text::trim(source).empty()) throw QueryError("empty filter", 0);
  CodeFilter filter;
  filter.source_ = std::string(source);
  filter.root_ = Parser(tokenize(source)).parse();
  return filter;
}

bool CodeFilter::matches(const Code& code) const { return evaluate(*root_, code); }

}  // namespace termgraph::store
