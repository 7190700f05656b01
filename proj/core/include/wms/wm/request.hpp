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
#include <set>
#include <string>

#include <nlohmann/json.hpp>

namespace wms::wm {

enum class RequestKind { Submit, Cancel, ResubmitFromState, SubmitDag };

std::string_view toString(RequestKind k);

/// A message on the wm-requests queue.
struct Request {
  RequestKind kind = RequestKind::Submit;
  std::string jobId;
  std::string owner;
  std::string jdl;       // Submit / SubmitDag
  int attempt = 1;       // attempt the request is for
  std::optional<std::int64_t> fromState;  // ResubmitFromState
  std::set<std::string> exclude;          // CEs to avoid for this attempt
};

nlohmann::json toJson(const Request& r);
/// Throws Error(BadRequest) on malformed input.
Request requestFromJson(const nlohmann::json& j);

}  // namespace wms::wm
