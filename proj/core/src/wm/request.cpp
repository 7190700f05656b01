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

#include "wms/wm/request.hpp"

#include "wms/error.hpp"

namespace wms::wm {

std::string_view toString(RequestKind k) {
  switch (k) {
    case RequestKind::Submit: return "Submit";
    case RequestKind::Cancel: return "Cancel";
    case RequestKind::ResubmitFromState: return "ResubmitFromState";
    case RequestKind::SubmitDag: return "SubmitDag";
  }
  return "?";
}

nlohmann::json toJson(const Request& r) {
  nlohmann::json j{{"kind", toString(r.kind)}, {"jobId", r.jobId}, {"owner", r.owner}, {"attempt", r.attempt}};
  if (!r.jdl.empty()) j["jdl"] = r.jdl;
  if (r.fromState) j["fromState"] = *r.fromState;
  if (!r.exclude.empty()) j["exclude"] = r.exclude;
  return j;
}

Request requestFromJson(const nlohmann::json& j) {
  try {
    Request r;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "Submit") r.kind = RequestKind::Submit;
    else if (kind == "Cancel") r.kind = RequestKind::Cancel;
    else if (kind == "ResubmitFromState") r.kind = RequestKind::ResubmitFromState;
    else if (kind == "SubmitDag") r.kind = RequestKind::SubmitDag;
    else throw Error(Errc::BadRequest, "unknown request kind '" + kind + "'");
    r.jobId = j.at("jobId").get<std::string>();
    r.owner = j.value("owner", std::string());
    r.jdl = j.value("jdl", std::string());
    r.attempt = j.value("attempt", 1);
    if (j.contains("fromState")) r.fromState = j["fromState"].get<std::int64_t>();
    if (j.contains("exclude")) r.exclude = j["exclude"].get<std::set<std::string>>();
    if (r.jobId.empty()) throw Error(Errc::BadRequest, "request without jobId");
    if ((r.kind == RequestKind::Submit || r.kind == RequestKind::SubmitDag) && r.jdl.empty())
      throw Error(Errc::BadRequest, "submit request without JDL");
    if (r.attempt < 1) throw Error(Errc::BadRequest, "attempt must be >= 1");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadRequest, std::string("malformed request: ") + e.what());
  }
}

}  // namespace wms::wm
