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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wms/classad/expr.hpp"

namespace wms::classad {

/// Ordered attribute -> expression map. Names are matched case-insensitively
/// and keep their original spelling for display.
class ClassAd {
 public:
  struct Entry {
    std::string name;
    Expr expr;
  };

  /// Throws Error(DuplicateAttribute) on a case-folded collision.
  void insert(std::string name, Expr expr);
  /// Replaces an existing binding in place or appends a new one.
  void set(std::string name, Expr expr);
  void set(std::string name, Value v) { set(std::move(name), makeLiteral(std::move(v))); }
  bool erase(std::string_view name);

  const Expr* lookup(std::string_view name) const;
  bool contains(std::string_view name) const { return lookup(name) != nullptr; }

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Literal-valued convenience accessors; nullopt when absent or not a literal of that type.
  std::optional<std::string> getString(std::string_view name) const;
  std::optional<std::int64_t> getInteger(std::string_view name) const;

  bool operator==(const ClassAd& o) const;

 private:
  std::vector<Entry> entries_;
};

/// Parses bracketed ClassAd syntax `[ name = expr; ... ]`.
/// Throws Error(SyntaxError) with line/column, Error(DuplicateAttribute).
ClassAd parseAd(std::string_view text);
Expr parseExpr(std::string_view text);

std::string unparse(const ClassAd& ad);
/// One attribute per line, for files meant to be read by people.
std::string unparsePretty(const ClassAd& ad);

}  // namespace wms::classad
