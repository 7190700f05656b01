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

#include "wms/classad/classad.hpp"

#include "wms/error.hpp"
#include "wms/util/fs.hpp"

namespace wms::classad {

using util::iequals;

void ClassAd::insert(std::string name, Expr expr) {
  if (lookup(name)) throw Error(Errc::DuplicateAttribute, "duplicate attribute '" + name + "'");
  entries_.push_back({std::move(name), std::move(expr)});
}

void ClassAd::set(std::string name, Expr expr) {
  for (auto& e : entries_) {
    if (iequals(e.name, name)) {
      e.expr = std::move(expr);
      return;
    }
  }
  entries_.push_back({std::move(name), std::move(expr)});
}

bool ClassAd::erase(std::string_view name) {
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (iequals(it->name, name)) {
      entries_.erase(it);
      return true;
    }
  }
  return false;
}

const Expr* ClassAd::lookup(std::string_view name) const {
  for (const auto& e : entries_)
    if (iequals(e.name, name)) return &e.expr;
  return nullptr;
}

std::optional<std::string> ClassAd::getString(std::string_view name) const {
  const Expr* e = lookup(name);
  if (!e) return std::nullopt;
  const auto* lit = std::get_if<Literal>(&(*e)->node);
  if (!lit || !lit->value.isString()) return std::nullopt;
  return lit->value.asString();
}

std::optional<std::int64_t> ClassAd::getInteger(std::string_view name) const {
  const Expr* e = lookup(name);
  if (!e) return std::nullopt;
  const auto* lit = std::get_if<Literal>(&(*e)->node);
  if (!lit || !lit->value.isInteger()) return std::nullopt;
  return lit->value.asInteger();
}

bool ClassAd::operator==(const ClassAd& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!iequals(entries_[i].name, o.entries_[i].name)) return false;
    if (!sameExpr(entries_[i].expr, o.entries_[i].expr)) return false;
  }
  return true;
}

std::string unparse(const ClassAd& ad) {
  std::string out = "[ ";
  for (const auto& e : ad.entries()) {
    out += e.name;
    out += " = ";
    out += unparse(e.expr);
    out += "; ";
  }
  return out + "]";
}

std::string unparsePretty(const ClassAd& ad) {
  std::string out = "[\n";
  for (const auto& e : ad.entries()) out += "  " + e.name + " = " + unparse(e.expr) + ";\n";
  return out + "]\n";
}

}  // namespace wms::classad
