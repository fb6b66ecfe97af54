#pragma once

/// @file ast.hpp
/// @brief Syntax tree and parser for the runtime's expression language.
///
/// Grammar:
///
///     expr    := lambda | sum
///     lambda  := "fn" "(" params? ")" "->" expr
///     sum     := prod (("+" | "-") prod)*
///     prod    := unary (("*" | "/") unary)*
///     unary   := "-" unary | postfix
///     postfix := atom ("(" args? ")")*
///     atom    := literal | path | "[" exprlist? "]" | "(" expr ")"
///     args    := exprlist? (";" name "=" expr ("," name "=" expr)*)?
///
/// Literals are 64-bit integers, floats (with "." or an exponent), double
/// quoted strings with \" and \\ escapes, true, false, null and missing.

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bridgewire/object.hpp"

namespace bridgewire::rt {

struct AstNode;
using AstPtr = std::shared_ptr<const AstNode>;

struct LiteralExpr {
  ObjectPtr value;
};
struct PathExpr {
  std::vector<std::string> segments;
};
struct NamedArgExpr {
  std::string name;
  AstPtr value;
};
struct CallExpr {
  AstPtr target;
  std::vector<AstPtr> positional;
  std::vector<NamedArgExpr> named;
};
struct LambdaExpr {
  std::vector<std::string> params;
  AstPtr body;
};
struct BinOpExpr {
  char op;
  AstPtr lhs;
  AstPtr rhs;
};
struct NegExpr {
  AstPtr operand;
};
struct ArrayLitExpr {
  std::vector<AstPtr> items;
};

struct AstNode {
  using Variant =
      std::variant<LiteralExpr, PathExpr, CallExpr, LambdaExpr, BinOpExpr, NegExpr, ArrayLitExpr>;
  Variant node;
  std::size_t pos = 0;  // byte offset in the source
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t pos, std::size_t line, std::size_t column, const std::string& what);
  std::size_t pos() const { return pos_; }
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t pos_, line_, column_;
};

AstPtr parse(std::string_view source);

}  // namespace bridgewire::rt
