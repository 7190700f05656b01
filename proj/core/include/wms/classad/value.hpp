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

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace wms::classad {

struct Undefined {
  bool operator==(const Undefined&) const = default;
};

struct ErrorValue {
  std::string message;  // never empty
  bool operator==(const ErrorValue&) const = default;
};

class Value;
using List = std::vector<Value>;

/// Result of evaluating an expression. Errors are in-band values so that
/// evaluation is total.
class Value {
 public:
  using Storage = std::variant<Undefined, ErrorValue, bool, std::int64_t, double, std::string, List>;

  Value() = default;
  Value(Undefined u) : v_(u) {}
  Value(bool b) : v_(b) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(double d) : v_(d) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(List l) : v_(std::move(l)) {}

  static Value error(std::string message);

  bool isUndefined() const { return std::holds_alternative<Undefined>(v_); }
  bool isError() const { return std::holds_alternative<ErrorValue>(v_); }
  bool isBool() const { return std::holds_alternative<bool>(v_); }
  bool isInteger() const { return std::holds_alternative<std::int64_t>(v_); }
  bool isReal() const { return std::holds_alternative<double>(v_); }
  bool isNumber() const { return isInteger() || isReal(); }
  bool isString() const { return std::holds_alternative<std::string>(v_); }
  bool isList() const { return std::holds_alternative<List>(v_); }

  bool asBool() const { return std::get<bool>(v_); }
  std::int64_t asInteger() const { return std::get<std::int64_t>(v_); }
  double asReal() const { return std::get<double>(v_); }
  /// Integer or Real widened to double.
  double asNumber() const { return isInteger() ? static_cast<double>(asInteger()) : asReal(); }
  const std::string& asString() const { return std::get<std::string>(v_); }
  const List& asList() const { return std::get<List>(v_); }
  const std::string& errorMessage() const { return std::get<ErrorValue>(v_).message; }

  bool isTrue() const { return isBool() && asBool(); }

  const Storage& storage() const { return v_; }

  bool operator==(const Value& o) const { return v_ == o.v_; }

 private:
  Storage v_;
};

/// Human-readable rendering used by diagnostics and the CLI.
std::string toString(const Value& v);

}  // namespace wms::classad
