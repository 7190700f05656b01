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

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wms/classad/value.hpp"

namespace wms::classad {

class ClassAd;
struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

enum class UnaryOp { Not, Negate };
enum class BinaryOp { Mul, Div, Mod, Add, Sub, Lt, Le, Gt, Ge, Eq, Ne, And, Or };

struct Literal {
  Value value;
};
struct AttrRef {
  std::optional<std::string> scope;  // lowercase
  std::string name;                  // original case
};
struct Unary {
  UnaryOp op;
  Expr operand;
};
struct Binary {
  BinaryOp op;
  Expr lhs;
  Expr rhs;
};
struct ListExpr {
  std::vector<Expr> items;
};
struct Call {
  std::string fn;  // lowercase; one of member, length, tolower
  std::vector<Expr> args;
};
struct Conditional {
  Expr cond;
  Expr then;
  Expr otherwise;
};
/// A nested `[ ... ]` record. Structural only; evaluates to an Error.
struct AdExpr {
  std::shared_ptr<const ClassAd> ad;
};

struct ExprNode {
  std::variant<Literal, AttrRef, Unary, Binary, ListExpr, Call, Conditional, AdExpr> node;
};

Expr makeLiteral(Value v);
Expr makeRef(std::string name);
Expr makeRef(std::string scope, std::string name);
Expr makeUnary(UnaryOp op, Expr operand);
Expr makeBinary(BinaryOp op, Expr lhs, Expr rhs);
Expr makeList(std::vector<Expr> items);
Expr makeCall(std::string fn, std::vector<Expr> args);
Expr makeConditional(Expr cond, Expr then, Expr otherwise);
Expr makeAd(ClassAd ad);

bool isBuiltin(std::string_view fn);
std::string_view symbol(UnaryOp op);
std::string_view symbol(BinaryOp op);

/// Structural equality (scopes and attribute names compared case-insensitively).
bool sameExpr(const Expr& a, const Expr& b);

/// True when any attribute reference in `e` is qualified with `scope`.
bool referencesScope(const Expr& e, std::string_view scope);

/// Canonical text; re-parses to a structurally equal expression.
std::string unparse(const Expr& e);

}  // namespace wms::classad
