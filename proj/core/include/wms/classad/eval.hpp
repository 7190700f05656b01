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
#include <utility>
#include <vector>

#include "wms/classad/classad.hpp"

namespace wms::classad {

/// Scope name -> ad bindings. `self` and `other` are the usual pair;
/// gangmatching adds `ce` and `se`.
class MatchContext {
 public:
  MatchContext() = default;
  explicit MatchContext(const ClassAd& self) { bind("self", self); }
  MatchContext(const ClassAd& self, const ClassAd& other) {
    bind("self", self);
    bind("other", other);
  }

  MatchContext& bind(std::string_view scope, const ClassAd& ad);
  const ClassAd* find(std::string_view scope) const;

 private:
  std::vector<std::pair<std::string, const ClassAd*>> scopes_;
};

Value evaluate(const Expr& expr, const MatchContext& ctx);

/// Same semantics as evaluate(); named for call sites that bind ce/se scopes.
inline Value evaluateMultiScope(const Expr& expr, const MatchContext& ctx) {
  return evaluate(expr, ctx);
}

/// Evaluates attribute `name` of ctx's `self` (Undefined when absent).
Value evaluateAttr(std::string_view name, const MatchContext& ctx);

/// Both sides' Requirements must evaluate to true; a missing Requirements is true.
bool matchTwo(const ClassAd& a, const ClassAd& b);

struct Rank {
  double value = 0.0;
  std::optional<std::string> diagnostic;
};

/// a.Rank evaluated with {self:a, other:b}.
Rank rankOf(const ClassAd& a, const ClassAd& b);
/// self.Rank evaluated in an arbitrary context.
Rank rankIn(const MatchContext& ctx);

}  // namespace wms::classad
