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

#include "wms/classad/eval.hpp"

#include <cmath>
#include <limits>

#include "wms/util/fs.hpp"

namespace wms::classad {

using util::iequals;

MatchContext& MatchContext::bind(std::string_view scope, const ClassAd& ad) {
  for (auto& [name, ptr] : scopes_) {
    if (iequals(name, scope)) {
      ptr = &ad;
      return *this;
    }
  }
  scopes_.emplace_back(util::lower(scope), &ad);
  return *this;
}

const ClassAd* MatchContext::find(std::string_view scope) const {
  for (const auto& [name, ptr] : scopes_)
    if (iequals(name, scope)) return ptr;
  return nullptr;
}

namespace {

constexpr int kMaxDepth = 256;

Value typeError(std::string_view op) { return Value::error(std::string("type mismatch in '") + std::string(op) + "'"); }

int compareStrings(const std::string& a, const std::string& b) {
  std::string la = util::lower(a), lb = util::lower(b);
  return la < lb ? -1 : (la == lb ? 0 : 1);
}

Value equality(const Value& a, const Value& b, bool negate) {
  if (a.isError()) return a;
  if (b.isError()) return b;
  if (a.isUndefined() || b.isUndefined()) return Value(Undefined{});
  bool eq;
  if (a.isNumber() && b.isNumber()) {
    if (a.isInteger() && b.isInteger()) eq = a.asInteger() == b.asInteger();
    else eq = a.asNumber() == b.asNumber();
  } else if (a.isString() && b.isString()) {
    eq = iequals(a.asString(), b.asString());
  } else if (a.isBool() && b.isBool()) {
    eq = a.asBool() == b.asBool();
  } else {
    return typeError(negate ? "!=" : "==");
  }
  return Value(negate ? !eq : eq);
}

Value relational(BinaryOp op, const Value& a, const Value& b) {
  if (a.isError()) return a;
  if (b.isError()) return b;
  if (a.isUndefined() || b.isUndefined()) return Value(Undefined{});
  int cmp;
  if (a.isNumber() && b.isNumber()) {
    if (a.isInteger() && b.isInteger()) {
      cmp = a.asInteger() < b.asInteger() ? -1 : (a.asInteger() == b.asInteger() ? 0 : 1);
    } else {
      double x = a.asNumber(), y = b.asNumber();
      cmp = x < y ? -1 : (x == y ? 0 : 1);
    }
  } else if (a.isString() && b.isString()) {
    cmp = compareStrings(a.asString(), b.asString());
  } else {
    return typeError(symbol(op));
  }
  switch (op) {
    case BinaryOp::Lt: return Value(cmp < 0);
    case BinaryOp::Le: return Value(cmp <= 0);
    case BinaryOp::Gt: return Value(cmp > 0);
    default: return Value(cmp >= 0);
  }
}

Value realResult(double d) {
  if (!std::isfinite(d)) return Value::error("real overflow");
  return Value(d);
}

Value arithmetic(BinaryOp op, const Value& a, const Value& b) {
  if (a.isError()) return a;
  if (b.isError()) return b;
  if (a.isUndefined() || b.isUndefined()) return Value(Undefined{});
  if (!a.isNumber() || !b.isNumber()) return typeError(symbol(op));
  if (a.isInteger() && b.isInteger()) {
    std::int64_t x = a.asInteger(), y = b.asInteger(), r = 0;
    switch (op) {
      case BinaryOp::Add:
        if (__builtin_add_overflow(x, y, &r)) return Value::error("integer overflow");
        return Value(r);
      case BinaryOp::Sub:
        if (__builtin_sub_overflow(x, y, &r)) return Value::error("integer overflow");
        return Value(r);
      case BinaryOp::Mul:
        if (__builtin_mul_overflow(x, y, &r)) return Value::error("integer overflow");
        return Value(r);
      case BinaryOp::Div:
        if (y == 0) return Value::error("division by zero");
        if (x == std::numeric_limits<std::int64_t>::min() && y == -1)
          return Value::error("integer overflow");
        return Value(x / y);
      default:
        if (y == 0) return Value::error("modulo by zero");
        if (y == -1) return Value(std::int64_t{0});
        return Value(x % y);
    }
  }
  double x = a.asNumber(), y = b.asNumber();
  switch (op) {
    case BinaryOp::Add: return realResult(x + y);
    case BinaryOp::Sub: return realResult(x - y);
    case BinaryOp::Mul: return realResult(x * y);
    case BinaryOp::Div:
      if (y == 0.0) return Value::error("division by zero");
      return realResult(x / y);
    default:
      if (y == 0.0) return Value::error("modulo by zero");
      return realResult(std::fmod(x, y));
  }
}

// Three-valued logic; Undefined is absorbed where the other side decides.
Value logical(BinaryOp op, const Value& a, const Value& b) {
  if (a.isError()) return a;
  if (b.isError()) return b;
  auto okType = [](const Value& v) { return v.isBool() || v.isUndefined(); };
  if (!okType(a) || !okType(b)) return typeError(symbol(op));
  if (op == BinaryOp::And) {
    if ((a.isBool() && !a.asBool()) || (b.isBool() && !b.asBool())) return Value(false);
    if (a.isUndefined() || b.isUndefined()) return Value(Undefined{});
    return Value(true);
  }
  if (a.isTrue() || b.isTrue()) return Value(true);
  if (a.isUndefined() || b.isUndefined()) return Value(Undefined{});
  return Value(false);
}

class Evaluator {
 public:
  Value eval(const Expr& e, const MatchContext& ctx) {
    if (!e) return Value(Undefined{});
    if (++depth_ > kMaxDepth) {
      --depth_;
      return Value::error("evaluation depth exceeded (cyclic reference?)");
    }
    Value v = std::visit([&](const auto& n) { return visit(n, ctx); }, e->node);
    --depth_;
    return v;
  }

  Value attribute(const ClassAd& ad, std::string_view name, const MatchContext& ctx) {
    const Expr* e = ad.lookup(name);
    if (!e) return Value(Undefined{});
    for (const Expr* active : inProgress_)
      if (active == e) return Value::error("cyclic reference to '" + std::string(name) + "'");
    inProgress_.push_back(e);
    Value v = eval(*e, ctx);
    inProgress_.pop_back();
    return v;
  }

 private:
  Value visit(const Literal& n, const MatchContext&) { return n.value; }

  Value visit(const AttrRef& n, const MatchContext& ctx) {
    if (!n.scope) {
      const ClassAd* self = ctx.find("self");
      if (!self) return Value(Undefined{});
      return attribute(*self, n.name, ctx);
    }
    const ClassAd* target = ctx.find(*n.scope);
    if (!target) return Value(Undefined{});
    // The referenced attribute is evaluated from the target ad's point of view.
    MatchContext inner = ctx;
    if (*n.scope == "other") {
      if (const ClassAd* self = ctx.find("self")) inner.bind("other", *self);
    }
    inner.bind("self", *target);
    return attribute(*target, n.name, inner);
  }

  Value visit(const Unary& n, const MatchContext& ctx) {
    Value v = eval(n.operand, ctx);
    if (v.isError() || v.isUndefined()) return v;
    if (n.op == UnaryOp::Not) {
      if (!v.isBool()) return typeError("!");
      return Value(!v.asBool());
    }
    if (v.isInteger()) {
      if (v.asInteger() == std::numeric_limits<std::int64_t>::min()) return Value::error("integer overflow");
      return Value(-v.asInteger());
    }
    if (v.isReal()) return Value(-v.asReal());
    return typeError("-");
  }

  Value visit(const Binary& n, const MatchContext& ctx) {
    Value a = eval(n.lhs, ctx);
    Value b = eval(n.rhs, ctx);
    switch (n.op) {
      case BinaryOp::And:
      case BinaryOp::Or: return logical(n.op, a, b);
      case BinaryOp::Eq: return equality(a, b, false);
      case BinaryOp::Ne: return equality(a, b, true);
      case BinaryOp::Lt:
      case BinaryOp::Le:
      case BinaryOp::Gt:
      case BinaryOp::Ge: return relational(n.op, a, b);
      default: return arithmetic(n.op, a, b);
    }
  }

  Value visit(const ListExpr& n, const MatchContext& ctx) {
    List out;
    out.reserve(n.items.size());
    for (const auto& i : n.items) out.push_back(eval(i, ctx));
    return Value(std::move(out));
  }

  Value visit(const Call& n, const MatchContext& ctx) {
    std::vector<Value> args;
    for (const auto& a : n.args) args.push_back(eval(a, ctx));
    for (const auto& a : args)
      if (a.isError()) return a;
    if (n.fn == "member") {
      if (args.size() != 2) return Value::error("member() takes 2 arguments");
      const Value& needle = args[0];
      const Value& hay = args[1];
      if (needle.isUndefined() || hay.isUndefined()) return Value(Undefined{});
      if (!hay.isList() || needle.isList()) return typeError("member");
      for (const auto& item : hay.asList()) {
        if (equality(needle, item, false).isTrue()) return Value(true);
      }
      return Value(false);
    }
    if (n.fn == "length") {
      if (args.size() != 1) return Value::error("length() takes 1 argument");
      if (args[0].isUndefined()) return args[0];
      if (args[0].isString()) return Value(static_cast<std::int64_t>(args[0].asString().size()));
      if (args[0].isList()) return Value(static_cast<std::int64_t>(args[0].asList().size()));
      return typeError("length");
    }
    if (n.fn == "tolower") {
      if (args.size() != 1) return Value::error("tolower() takes 1 argument");
      if (args[0].isUndefined()) return args[0];
      if (!args[0].isString()) return typeError("tolower");
      return Value(util::lower(args[0].asString()));
    }
    return Value::error("unknown function '" + n.fn + "'");
  }

  Value visit(const Conditional& n, const MatchContext& ctx) {
    Value c = eval(n.cond, ctx);
    if (c.isError() || c.isUndefined()) return c;
    if (!c.isBool()) return typeError("?:");
    return eval(c.asBool() ? n.then : n.otherwise, ctx);
  }

  Value visit(const AdExpr&, const MatchContext&) { return Value::error("nested ad is not a value"); }

  int depth_ = 0;
  std::vector<const Expr*> inProgress_;
};

bool requirementsHold(const ClassAd& self, const ClassAd& other) {
  const Expr* req = self.lookup("requirements");
  if (!req) return true;
  MatchContext ctx(self, other);
  return Evaluator().eval(*req, ctx).isTrue();
}

}  // namespace

Value evaluate(const Expr& expr, const MatchContext& ctx) { return Evaluator().eval(expr, ctx); }

Value evaluateAttr(std::string_view name, const MatchContext& ctx) {
  const ClassAd* self = ctx.find("self");
  if (!self) return Value(Undefined{});
  return Evaluator().attribute(*self, name, ctx);
}

bool matchTwo(const ClassAd& a, const ClassAd& b) { return requirementsHold(a, b) && requirementsHold(b, a); }

Rank rankIn(const MatchContext& ctx) {
  const ClassAd* self = ctx.find("self");
  if (!self || !self->lookup("rank")) return {};
  Value v = evaluateAttr("rank", ctx);
  if (v.isNumber()) return {v.asNumber(), std::nullopt};
  return {0.0, "rank evaluated to " + toString(v) + ", using 0.0"};
}

Rank rankOf(const ClassAd& a, const ClassAd& b) { return rankIn(MatchContext(a, b)); }

}  // namespace wms::classad
