/***************************************************************
 *
 * Copyright (C) 2026, The gridwms Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License"); you
 * may not use this file except in compliance with the License.  You may
 * obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 ***************************************************************/

#include <cerrno>
#include <cstdlib>
#include <limits>

#include "wms/classad/classad.hpp"
#include "wms/error.hpp"
#include "wms/util/fs.hpp"

namespace wms::classad {

namespace {

enum class Tok { End, Ident, Int, Real, String, Punct };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skipSpace();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        t.text += advance();
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::Int;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
        t.text += advance();
      if (pos_ < src_.size() && src_[pos_] == '.') {
        t.kind = Tok::Real;
        t.text += advance();
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          t.text += advance();
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        t.kind = Tok::Real;
        t.text += advance();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) t.text += advance();
        if (pos_ >= src_.size() || !std::isdigit(static_cast<unsigned char>(src_[pos_])))
          fail(t, "malformed exponent");
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
          t.text += advance();
      }
      return t;
    }
    if (c == '"') {
      t.kind = Tok::String;
      advance();
      for (;;) {
        if (pos_ >= src_.size()) fail(t, "unterminated string literal");
        char ch = advance();
        if (ch == '"') break;
        if (ch == '\\') {
          if (pos_ >= src_.size()) fail(t, "unterminated string literal");
          char esc = advance();
          switch (esc) {
            case 'n': t.text += '\n'; break;
            case 't': t.text += '\t'; break;
            case '\\': t.text += '\\'; break;
            case '"': t.text += '"'; break;
            default: fail(t, std::string("unknown escape \\") + esc);
          }
        } else {
          t.text += ch;
        }
      }
      return t;
    }
    t.kind = Tok::Punct;
    static constexpr std::string_view kTwo[] = {"==", "!=", "<=", ">=", "&&", "||"};
    for (auto two : kTwo) {
      if (src_.substr(pos_, 2) == two) {
        t.text = std::string(two);
        advance();
        advance();
        return t;
      }
    }
    static constexpr std::string_view kOne = "[]{}();=,.?:!+-*/%<>";
    if (kOne.find(c) == std::string_view::npos) fail(t, std::string("unexpected character '") + c + "'");
    t.text = std::string(1, advance());
    return t;
  }

  [[noreturn]] static void fail(const Token& at, const std::string& msg) {
    throw Error(Errc::SyntaxError,
                "line " + std::to_string(at.line) + ", column " + std::to_string(at.col) + ": " + msg);
  }

 private:
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skipSpace() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || src_.substr(pos_, 2) == "//") {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (src_.substr(pos_, 2) == "/*") {
        advance();
        advance();
        while (pos_ < src_.size() && src_.substr(pos_, 2) != "*/") advance();
        if (pos_ < src_.size()) {
          advance();
          advance();
        }
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { cur_ = lex_.next(); }

  ClassAd parseTopAd() {
    ClassAd ad = parseAdBody();
    expectEnd();
    return ad;
  }

  Expr parseTopExpr() {
    Expr e = parseExpr();
    expectEnd();
    return e;
  }

 private:
  bool isPunct(std::string_view p) const { return cur_.kind == Tok::Punct && cur_.text == p; }
  bool isKeyword(std::string_view k) const {
    return cur_.kind == Tok::Ident && util::iequals(cur_.text, k);
  }

  void expect(std::string_view p) {
    if (!isPunct(p)) Lexer::fail(cur_, "expected '" + std::string(p) + "', found " + describe(cur_));
    cur_ = lex_.next();
  }

  void expectEnd() {
    if (cur_.kind != Tok::End) Lexer::fail(cur_, "trailing input " + describe(cur_));
  }

  static std::string describe(const Token& t) {
    switch (t.kind) {
      case Tok::End: return "end of input";
      case Tok::String: return "string literal";
      default: return "'" + t.text + "'";
    }
  }

  ClassAd parseAdBody() {
    expect("[");
    ClassAd ad;
    while (!isPunct("]")) {
      if (cur_.kind != Tok::Ident) Lexer::fail(cur_, "expected attribute name, found " + describe(cur_));
      Token nameTok = cur_;
      if (isReservedWord(nameTok.text)) Lexer::fail(nameTok, "reserved word '" + nameTok.text + "' used as attribute name");
      cur_ = lex_.next();
      expect("=");
      Expr value = parseExpr();
      try {
        ad.insert(nameTok.text, std::move(value));
      } catch (const Error& e) {
        throw Error(Errc::DuplicateAttribute, "line " + std::to_string(nameTok.line) + ", column " +
                                                  std::to_string(nameTok.col) + ": " + e.what());
      }
      if (isPunct(";")) {
        cur_ = lex_.next();
      } else if (!isPunct("]")) {
        Lexer::fail(cur_, "expected ';' or ']', found " + describe(cur_));
      }
    }
    expect("]");
    return ad;
  }

  static bool isReservedWord(std::string_view w) {
    return util::iequals(w, "true") || util::iequals(w, "false") || util::iequals(w, "undefined") ||
           util::iequals(w, "error");
  }

  Expr parseExpr() {
    Expr cond = parseOr();
    if (isPunct("?")) {
      cur_ = lex_.next();
      Expr then = parseExpr();
      expect(":");
      Expr otherwise = parseExpr();
      return makeConditional(std::move(cond), std::move(then), std::move(otherwise));
    }
    return cond;
  }

  Expr parseOr() {
    Expr lhs = parseAnd();
    while (isPunct("||")) {
      cur_ = lex_.next();
      lhs = makeBinary(BinaryOp::Or, std::move(lhs), parseAnd());
    }
    return lhs;
  }

  Expr parseAnd() {
    Expr lhs = parseEquality();
    while (isPunct("&&")) {
      cur_ = lex_.next();
      lhs = makeBinary(BinaryOp::And, std::move(lhs), parseEquality());
    }
    return lhs;
  }

  Expr parseEquality() {
    Expr lhs = parseRelational();
    while (isPunct("==") || isPunct("!=")) {
      BinaryOp op = cur_.text == "==" ? BinaryOp::Eq : BinaryOp::Ne;
      cur_ = lex_.next();
      lhs = makeBinary(op, std::move(lhs), parseRelational());
    }
    return lhs;
  }

  Expr parseRelational() {
    Expr lhs = parseAdditive();
    for (;;) {
      BinaryOp op;
      if (isPunct("<")) op = BinaryOp::Lt;
      else if (isPunct("<=")) op = BinaryOp::Le;
      else if (isPunct(">")) op = BinaryOp::Gt;
      else if (isPunct(">=")) op = BinaryOp::Ge;
      else return lhs;
      cur_ = lex_.next();
      lhs = makeBinary(op, std::move(lhs), parseAdditive());
    }
  }

  Expr parseAdditive() {
    Expr lhs = parseMultiplicative();
    while (isPunct("+") || isPunct("-")) {
      BinaryOp op = cur_.text == "+" ? BinaryOp::Add : BinaryOp::Sub;
      cur_ = lex_.next();
      lhs = makeBinary(op, std::move(lhs), parseMultiplicative());
    }
    return lhs;
  }

  Expr parseMultiplicative() {
    Expr lhs = parseUnary();
    for (;;) {
      BinaryOp op;
      if (isPunct("*")) op = BinaryOp::Mul;
      else if (isPunct("/")) op = BinaryOp::Div;
      else if (isPunct("%")) op = BinaryOp::Mod;
      else return lhs;
      cur_ = lex_.next();
      lhs = makeBinary(op, std::move(lhs), parseUnary());
    }
  }

  Expr parseUnary() {
    if (isPunct("!")) {
      cur_ = lex_.next();
      return makeUnary(UnaryOp::Not, parseUnary());
    }
    if (isPunct("-")) {
      cur_ = lex_.next();
      // A minus sign directly before a numeric literal is part of the literal.
      if (cur_.kind == Tok::Int || cur_.kind == Tok::Real) return parseNumber(true);
      return makeUnary(UnaryOp::Negate, parseUnary());
    }
    return parsePrimary();
  }

  Expr parseNumber(bool negative) {
    Token t = cur_;
    cur_ = lex_.next();
    if (t.kind == Tok::Real) {
      errno = 0;
      double d = std::strtod(t.text.c_str(), nullptr);
      if (errno == ERANGE) Lexer::fail(t, "real literal out of range");
      return makeLiteral(Value(negative ? -d : d));
    }
    errno = 0;
    unsigned long long mag = std::strtoull(t.text.c_str(), nullptr, 10);
    constexpr auto kMax = static_cast<unsigned long long>(std::numeric_limits<std::int64_t>::max());
    if (errno == ERANGE || mag > kMax + (negative ? 1ULL : 0ULL))
      Lexer::fail(t, "integer literal out of range");
    std::int64_t v;
    if (negative) {
      v = mag == kMax + 1ULL ? std::numeric_limits<std::int64_t>::min() : -static_cast<std::int64_t>(mag);
    } else {
      v = static_cast<std::int64_t>(mag);
    }
    return makeLiteral(Value(v));
  }

  std::vector<Expr> parseExprList(std::string_view close) {
    std::vector<Expr> items;
    if (isPunct(close)) {
      cur_ = lex_.next();
      return items;
    }
    for (;;) {
      items.push_back(parseExpr());
      if (isPunct(",")) {
        cur_ = lex_.next();
        continue;
      }
      expect(close);
      return items;
    }
  }

  Expr parsePrimary() {
    switch (cur_.kind) {
      case Tok::Int:
      case Tok::Real:
        return parseNumber(false);
      case Tok::String: {
        std::string s = cur_.text;
        cur_ = lex_.next();
        return makeLiteral(Value(std::move(s)));
      }
      case Tok::Ident: {
        Token id = cur_;
        if (isKeyword("true") || isKeyword("false")) {
          cur_ = lex_.next();
          return makeLiteral(Value(util::iequals(id.text, "true")));
        }
        if (isKeyword("undefined")) {
          cur_ = lex_.next();
          return makeLiteral(Value(Undefined{}));
        }
        if (isKeyword("error")) {
          cur_ = lex_.next();
          return makeLiteral(Value::error("error"));
        }
        cur_ = lex_.next();
        if (isPunct("(")) {
          if (!isBuiltin(id.text)) Lexer::fail(id, "unknown function '" + id.text + "'");
          cur_ = lex_.next();
          return makeCall(id.text, parseExprList(")"));
        }
        if (isPunct(".")) {
          cur_ = lex_.next();
          if (cur_.kind != Tok::Ident) Lexer::fail(cur_, "expected attribute name after '.'");
          std::string name = cur_.text;
          cur_ = lex_.next();
          return makeRef(id.text, std::move(name));
        }
        return makeRef(id.text);
      }
      case Tok::Punct:
        if (isPunct("(")) {
          cur_ = lex_.next();
          Expr e = parseExpr();
          expect(")");
          return e;
        }
        if (isPunct("{")) {
          cur_ = lex_.next();
          return makeList(parseExprList("}"));
        }
        if (isPunct("[")) return makeAd(parseAdBody());
        [[fallthrough]];
      case Tok::End:
        break;
    }
    Lexer::fail(cur_, "unexpected " + describe(cur_));
  }

  Lexer lex_;
  Token cur_;
};

}  // namespace

ClassAd parseAd(std::string_view text) { return Parser(text).parseTopAd(); }

Expr parseExpr(std::string_view text) { return Parser(text).parseTopExpr(); }

}  // namespace wms::classad
