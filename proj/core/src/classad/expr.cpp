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

#include "wms/classad/expr.hpp"

#include <cmath>
#include <cstdio>

#include "wms/classad/classad.hpp"
#include "wms/util/fs.hpp"

namespace wms::classad {

using util::iequals;
using util::lower;

Expr makeLiteral(Value v) { return std::make_shared<ExprNode>(ExprNode{Literal{std::move(v)}}); }

Expr makeRef(std::string name) {
  return std::make_shared<ExprNode>(ExprNode{AttrRef{std::nullopt, std::move(name)}});
}

Expr makeRef(std::string scope, std::string name) {
  return std::make_shared<ExprNode>(ExprNode{AttrRef{lower(scope), std::move(name)}});
}

Expr makeUnary(UnaryOp op, Expr operand) {
  return std::make_shared<ExprNode>(ExprNode{Unary{op, std::move(operand)}});
}

Expr makeBinary(BinaryOp op, Expr lhs, Expr rhs) {
  return std::make_shared<ExprNode>(ExprNode{Binary{op, std::move(lhs), std::move(rhs)}});
}

Expr makeList(std::vector<Expr> items) {
  return std::make_shared<ExprNode>(ExprNode{ListExpr{std::move(items)}});
}

Expr makeCall(std::string fn, std::vector<Expr> args) {
  return std::make_shared<ExprNode>(ExprNode{Call{lower(fn), std::move(args)}});
}

Expr makeConditional(Expr cond, Expr then, Expr otherwise) {
  return std::make_shared<ExprNode>(
      ExprNode{Conditional{std::move(cond), std::move(then), std::move(otherwise)}});
}

Expr makeAd(ClassAd ad) {
  return std::make_shared<ExprNode>(ExprNode{AdExpr{std::make_shared<const ClassAd>(std::move(ad))}});
}

bool isBuiltin(std::string_view fn) {
  return iequals(fn, "member") || iequals(fn, "length") || iequals(fn, "tolower");
}

std::string_view symbol(UnaryOp op) { return op == UnaryOp::Not ? "!" : "-"; }

std::string_view symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
  }
  return "?";
}

namespace {

bool sameList(const std::vector<Expr>& a, const std::vector<Expr>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!sameExpr(a[i], b[i])) return false;
  return true;
}

}  // namespace

bool sameExpr(const Expr& a, const Expr& b) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->node);
        if constexpr (std::is_same_v<T, Literal>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, AttrRef>) {
          return x.scope == y.scope && iequals(x.name, y.name);
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && sameExpr(x.operand, y.operand);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && sameExpr(x.lhs, y.lhs) && sameExpr(x.rhs, y.rhs);
        } else if constexpr (std::is_same_v<T, ListExpr>) {
          return sameList(x.items, y.items);
        } else if constexpr (std::is_same_v<T, Call>) {
          return x.fn == y.fn && sameList(x.args, y.args);
        } else if constexpr (std::is_same_v<T, Conditional>) {
          return sameExpr(x.cond, y.cond) && sameExpr(x.then, y.then) &&
                 sameExpr(x.otherwise, y.otherwise);
        } else {
          return *x.ad == *y.ad;
        }
      },
      a->node);
}

bool referencesScope(const Expr& e, std::string_view scope) {
  if (!e) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return false;
        } else if constexpr (std::is_same_v<T, AttrRef>) {
          return x.scope && iequals(*x.scope, scope);
        } else if constexpr (std::is_same_v<T, Unary>) {
          return referencesScope(x.operand, scope);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return referencesScope(x.lhs, scope) || referencesScope(x.rhs, scope);
        } else if constexpr (std::is_same_v<T, ListExpr> || std::is_same_v<T, Call>) {
          const auto& items = [&]() -> const std::vector<Expr>& {
            if constexpr (std::is_same_v<T, ListExpr>) return x.items;
            else return x.args;
          }();
          for (const auto& i : items)
            if (referencesScope(i, scope)) return true;
          return false;
        } else if constexpr (std::is_same_v<T, Conditional>) {
          return referencesScope(x.cond, scope) || referencesScope(x.then, scope) ||
                 referencesScope(x.otherwise, scope);
        } else {
          return false;
        }
      },
      e->node);
}

namespace {

std::string literalText(const Value& v) {
  if (v.isError()) return "error";
  if (v.isReal()) {
    double d = v.asReal();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", d);
    std::string s = buf;
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  }
  return toString(v);
}

}  // namespace

std::string unparse(const Expr& e) {
  if (!e) return "undefined";
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return literalText(x.value);
        } else if constexpr (std::is_same_v<T, AttrRef>) {
          return x.scope ? *x.scope + "." + x.name : x.name;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return std::string(symbol(x.op)) + "(" + unparse(x.operand) + ")";
        } else if constexpr (std::is_same_v<T, Binary>) {
          return "(" + unparse(x.lhs) + " " + std::string(symbol(x.op)) + " " + unparse(x.rhs) + ")";
        } else if constexpr (std::is_same_v<T, ListExpr>) {
          std::string out = "{";
          for (std::size_t i = 0; i < x.items.size(); ++i) {
            if (i) out += ", ";
            out += unparse(x.items[i]);
          }
          return out + "}";
        } else if constexpr (std::is_same_v<T, Call>) {
          std::string out = x.fn + "(";
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (i) out += ", ";
            out += unparse(x.args[i]);
          }
          return out + ")";
        } else if constexpr (std::is_same_v<T, Conditional>) {
          return "(" + unparse(x.cond) + " ? " + unparse(x.then) + " : " + unparse(x.otherwise) + ")";
        } else {
          return unparse(*x.ad);
        }
      },
      e->node);
}

}  // namespace wms::classad
