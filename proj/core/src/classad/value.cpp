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

#include "wms/classad/value.hpp"

#include <cstdio>

namespace wms::classad {

Value Value::error(std::string message) {
  Value v;
  v.v_ = ErrorValue{message.empty() ? std::string("error") : std::move(message)};
  return v;
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

}  // namespace

std::string toString(const Value& v) {
  struct Visitor {
    std::string operator()(const Undefined&) const { return "undefined"; }
    std::string operator()(const ErrorValue& e) const { return "error(" + e.message + ")"; }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      return buf;
    }
    std::string operator()(const std::string& s) const { return quote(s); }
    std::string operator()(const List& l) const {
      std::string out = "{";
      for (std::size_t i = 0; i < l.size(); ++i) {
        if (i) out += ", ";
        out += toString(l[i]);
      }
      return out + "}";
    }
  };
  return std::visit(Visitor{}, v.storage());
}

}  // namespace wms::classad
