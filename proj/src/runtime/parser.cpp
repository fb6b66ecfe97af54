#include <fmt/format.h>

#include <charconv>
#include <unordered_set>

#include "bridgewire/alias.hpp"
#include "bridgewire/runtime/ast.hpp"

namespace bridgewire::rt {

ParseError::ParseError(std::size_t pos, std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error(fmt::format("parse error at {}:{}: {}", line, column, what)),
      pos_(pos),
      line_(line),
      column_(column) {}

namespace {

enum class Tok { End, Ident, Int, Float, String, Punct, Arrow };

struct Token {
  Tok kind = Tok::End;
  std::string text;  // identifier, decoded string, number spelling or punctuation
  std::size_t pos = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {
    if (auto bad = find_invalid_utf8(src)) fail(*bad, "source is not valid UTF-8");
    advance();
  }

  AstPtr parse_all() {
    auto e = expr();
    if (tok_.kind != Tok::End) fail(tok_.pos, fmt::format("unexpected '{}'", tok_.text));
    return e;
  }

 private:
  [[noreturn]] void fail(std::size_t pos, const std::string& what) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos && i < src_.size(); ++i) {
      if (src_[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(src_[i]) & 0xC0) != 0x80) {
        ++col;
      }
    }
    throw ParseError(pos, line, col, what);
  }

  static bool ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
  }
  static bool ident_char(unsigned char c) {
    return ident_start(c) || (c >= '0' && c <= '9') || c == '!';
  }
  static bool digit(char c) { return c >= '0' && c <= '9'; }

  void advance() {
    while (i_ < src_.size() && (src_[i_] == ' ' || src_[i_] == '\t' || src_[i_] == '\n' || src_[i_] == '\r'))
      ++i_;
    tok_ = Token{};
    tok_.pos = i_;
    if (i_ >= src_.size()) return;
    const char c = src_[i_];
    if (ident_start(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < src_.size() && ident_char(static_cast<unsigned char>(src_[j]))) ++j;
      tok_.kind = Tok::Ident;
      tok_.text = std::string(src_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    if (digit(c)) {
      std::size_t j = i_;
      bool is_float = false;
      while (j < src_.size() && digit(src_[j])) ++j;
      if (j < src_.size() && src_[j] == '.' && j + 1 < src_.size() && digit(src_[j + 1])) {
        is_float = true;
        ++j;
        while (j < src_.size() && digit(src_[j])) ++j;
      }
      if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
        if (k < src_.size() && digit(src_[k])) {
          is_float = true;
          j = k;
          while (j < src_.size() && digit(src_[j])) ++j;
        }
      }
      tok_.kind = is_float ? Tok::Float : Tok::Int;
      tok_.text = std::string(src_.substr(i_, j - i_));
      i_ = j;
      return;
    }
    if (c == '"') {
      std::string s;
      std::size_t j = i_ + 1;
      while (true) {
        if (j >= src_.size()) fail(i_, "unterminated string literal");
        char d = src_[j];
        if (d == '"') break;
        if (d == '\\') {
          if (j + 1 >= src_.size()) fail(j, "unterminated string literal");
          char e = src_[j + 1];
          if (e == '"' || e == '\\') {
            s += e;
          } else if (e == 'n') {
            s += '\n';
          } else if (e == 't') {
            s += '\t';
          } else {
            fail(j, fmt::format("unknown escape '\\{}'", e));
          }
          j += 2;
          continue;
        }
        s += d;
        ++j;
      }
      tok_.kind = Tok::String;
      tok_.text = std::move(s);
      i_ = j + 1;
      return;
    }
    if (c == '-' && i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
      tok_.kind = Tok::Arrow;
      tok_.text = "->";
      i_ += 2;
      return;
    }
    static constexpr std::string_view kPunct = "()[],;=.+-*/";
    if (kPunct.find(c) != std::string_view::npos) {
      tok_.kind = Tok::Punct;
      tok_.text = std::string(1, c);
      ++i_;
      return;
    }
    fail(i_, fmt::format("unexpected character '{}'", c));
  }

  bool at_punct(char c) const { return tok_.kind == Tok::Punct && tok_.text[0] == c; }
  bool at_keyword(std::string_view kw) const { return tok_.kind == Tok::Ident && tok_.text == kw; }

  void expect_punct(char c) {
    if (!at_punct(c))
      fail(tok_.pos, tok_.kind == Tok::End ? fmt::format("expected '{}' but input ended", c)
                                            : fmt::format("expected '{}' but found '{}'", c, tok_.text));
    advance();
  }

  std::string expect_ident(std::string_view what) {
    if (tok_.kind != Tok::Ident || is_reserved(tok_.text))
      fail(tok_.pos, fmt::format("expected {}", what));
    std::string s = tok_.text;
    advance();
    return s;
  }

  static bool is_reserved(std::string_view s) {
    return s == "fn" || s == "true" || s == "false" || s == "null" || s == "missing";
  }

  static AstPtr node(AstNode::Variant v, std::size_t pos) {
    return std::make_shared<const AstNode>(AstNode{std::move(v), pos});
  }

  AstPtr expr() {
    if (at_keyword("fn")) return lambda();
    return sum();
  }

  AstPtr lambda() {
    const auto pos = tok_.pos;
    advance();
    expect_punct('(');
    std::vector<std::string> params;
    std::unordered_set<std::string> seen;
    if (!at_punct(')')) {
      while (true) {
        const auto ppos = tok_.pos;
        auto name = expect_ident("parameter name");
        if (!seen.insert(name).second) fail(ppos, fmt::format("duplicate parameter '{}'", name));
        params.push_back(std::move(name));
        if (!at_punct(',')) break;
        advance();
      }
    }
    expect_punct(')');
    if (tok_.kind != Tok::Arrow) fail(tok_.pos, "expected '->'");
    advance();
    auto body = expr();
    return node(LambdaExpr{std::move(params), std::move(body)}, pos);
  }

  AstPtr sum() {
    auto lhs = prod();
    while (at_punct('+') || at_punct('-')) {
      const char op = tok_.text[0];
      const auto pos = tok_.pos;
      advance();
      lhs = node(BinOpExpr{op, lhs, prod()}, pos);
    }
    return lhs;
  }

  AstPtr prod() {
    auto lhs = unary();
    while (at_punct('*') || at_punct('/')) {
      const char op = tok_.text[0];
      const auto pos = tok_.pos;
      advance();
      lhs = node(BinOpExpr{op, lhs, unary()}, pos);
    }
    return lhs;
  }

  AstPtr unary() {
    if (at_punct('-')) {
      const auto pos = tok_.pos;
      advance();
      return node(NegExpr{unary()}, pos);
    }
    return postfix();
  }

  AstPtr postfix() {
    auto target = atom();
    while (at_punct('(')) {
      const auto pos = tok_.pos;
      advance();
      CallExpr call;
      call.target = target;
      if (!at_punct(')') && !at_punct(';')) {
        while (true) {
          call.positional.push_back(expr());
          if (!at_punct(',')) break;
          advance();
        }
      }
      if (at_punct(';')) {
        advance();
        std::unordered_set<std::string> seen;
        while (true) {
          const auto npos = tok_.pos;
          auto name = expect_ident("argument name");
          if (!seen.insert(name).second) fail(npos, fmt::format("duplicate named argument '{}'", name));
          expect_punct('=');
          call.named.push_back({std::move(name), expr()});
          if (!at_punct(',')) break;
          advance();
        }
      }
      expect_punct(')');
      target = node(std::move(call), pos);
    }
    return target;
  }

  AstPtr atom() {
    const auto pos = tok_.pos;
    switch (tok_.kind) {
      case Tok::End:
        fail(pos, "unexpected end of input");
      case Tok::Int: {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(tok_.text.data(), tok_.text.data() + tok_.text.size(), v);
        if (ec != std::errc{}) fail(pos, fmt::format("integer literal {} out of range", tok_.text));
        advance();
        return node(LiteralExpr{make(TypedArray::scalar(v))}, pos);
      }
      case Tok::Float: {
        double v = 0;
        auto [p, ec] = std::from_chars(tok_.text.data(), tok_.text.data() + tok_.text.size(), v);
        if (ec != std::errc{}) fail(pos, fmt::format("float literal {} out of range", tok_.text));
        advance();
        return node(LiteralExpr{make(TypedArray::scalar(v))}, pos);
      }
      case Tok::String: {
        auto s = tok_.text;
        advance();
        return node(LiteralExpr{make(TypedArray::scalar(std::move(s)))}, pos);
      }
      case Tok::Ident: {
        if (tok_.text == "true" || tok_.text == "false") {
          bool b = tok_.text == "true";
          advance();
          return node(LiteralExpr{make(TypedArray::scalar(to_bool(b)))}, pos);
        }
        if (tok_.text == "null") {
          advance();
          return node(LiteralExpr{make(Null{})}, pos);
        }
        if (tok_.text == "missing") {
          advance();
          return node(LiteralExpr{make(TypedArray::all_missing(ElemType::Bool, {}))}, pos);
        }
        if (tok_.text == "fn") fail(pos, "unexpected 'fn'");
        PathExpr path;
        path.segments.push_back(tok_.text);
        advance();
        while (at_punct('.')) {
          advance();
          path.segments.push_back(expect_ident("name after '.'"));
        }
        return node(std::move(path), pos);
      }
      case Tok::Punct:
        if (at_punct('(')) {
          advance();
          auto e = expr();
          expect_punct(')');
          return e;
        }
        if (at_punct('[')) {
          advance();
          ArrayLitExpr arr;
          if (!at_punct(']')) {
            while (true) {
              arr.items.push_back(expr());
              if (!at_punct(',')) break;
              advance();
            }
          }
          expect_punct(']');
          return node(std::move(arr), pos);
        }
        [[fallthrough]];
      default:
        fail(pos, fmt::format("unexpected '{}'", tok_.text));
    }
  }

  std::string_view src_;
  std::size_t i_ = 0;
  Token tok_;
};

}  // namespace

AstPtr parse(std::string_view source) { return Parser(source).parse_all(); }

}  // namespace bridgewire::rt
