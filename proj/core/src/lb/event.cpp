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

#include "wms/lb/event.hpp"

#include <algorithm>
#include <array>

#include "wms/error.hpp"
#include "wms/util/fs.hpp"

namespace wms::lb {

namespace {

constexpr std::array kSources{"UI", "Gateway", "WM", "Broker", "Executor", "LogMonitor", "JobWrapper"};
constexpr std::array kKinds{"Registered", "Accepted",  "Refused", "Matched",     "Staged",  "Committed", "Running",
                            "Chkpt",      "Done",      "Aborted", "Cancelled",   "Resubmitted", "Cleared", "UserTag"};
constexpr std::array kStates{"SUBMITTED",   "WAITING", "READY",     "SCHEDULED", "RUNNING",
                             "DONE_OK",     "DONE_FAILED", "ABORTED", "CANCELLED", "CLEARED"};

template <class E, std::size_t N>
std::optional<E> lookup(const std::array<const char*, N>& names, std::string_view s, bool ci) {
  for (std::size_t i = 0; i < N; ++i) {
    if (ci ? util::iequals(names[i], s) : std::string_view(names[i]) == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view toString(Source s) { return kSources[static_cast<std::size_t>(s)]; }
std::string_view toString(Kind k) { return kKinds[static_cast<std::size_t>(k)]; }
std::string_view toString(JobState s) { return kStates[static_cast<std::size_t>(s)]; }
std::optional<Source> parseSource(std::string_view s) { return lookup<Source>(kSources, s, false); }
std::optional<Kind> parseKind(std::string_view s) { return lookup<Kind>(kKinds, s, false); }
std::optional<JobState> parseJobState(std::string_view s) { return lookup<JobState>(kStates, s, true); }

bool isTerminal(JobState s) { return precedence(s) >= precedence(JobState::DONE_OK); }

int Event::attempt() const {
  auto it = payload.find("attempt");
  if (it == payload.end()) return 1;
  try {
    return std::max(1, std::stoi(it->second));
  } catch (...) {
    return 1;
  }
}

std::string toLine(const Event& e) {
  nlohmann::ordered_json j;
  j["job"] = e.jobId;
  j["src"] = toString(e.source);
  j["sseq"] = e.sourceSeq;
  j["ts"] = e.timestamp;
  j["kind"] = toString(e.kind);
  j["payload"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : e.payload) j["payload"][k] = v;
  return j.dump();
}

nlohmann::json toJson(const Event& e) { return nlohmann::json::parse(toLine(e)); }

Event eventFromJson(const nlohmann::json& j) {
  Event e;
  e.jobId = j.at("job").get<std::string>();
  auto src = parseSource(j.at("src").get<std::string>());
  auto kind = parseKind(j.at("kind").get<std::string>());
  if (!src || !kind) throw Error(Errc::CorruptRecord, "unknown event source or kind");
  e.source = *src;
  e.kind = *kind;
  e.sourceSeq = j.at("sseq").get<std::int64_t>();
  e.timestamp = j.value("ts", std::int64_t{0});
  if (j.contains("payload")) {
    for (const auto& [k, v] : j.at("payload").items()) e.payload[k] = v.is_string() ? v.get<std::string>() : v.dump();
  }
  return e;
}

std::optional<Event> fromLine(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  try {
    return eventFromJson(j);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

int precedence(JobState s) { return static_cast<int>(s); }

std::optional<JobState> stateOf(const Event& e) {
  switch (e.kind) {
    case Kind::Registered: return JobState::SUBMITTED;
    case Kind::Accepted: return JobState::WAITING;
    case Kind::Refused: return JobState::ABORTED;
    case Kind::Matched: return JobState::READY;
    case Kind::Committed: return JobState::SCHEDULED;
    case Kind::Running: return JobState::RUNNING;
    case Kind::Done: {
      auto it = e.payload.find("exitCode");
      return (it != e.payload.end() && it->second == "0") ? JobState::DONE_OK : JobState::DONE_FAILED;
    }
    case Kind::Aborted: return JobState::ABORTED;
    case Kind::Cancelled: return JobState::CANCELLED;
    case Kind::Cleared: return JobState::CLEARED;
    case Kind::Staged:
    case Kind::Chkpt:
    case Kind::UserTag:
    case Kind::Resubmitted: return std::nullopt;
  }
  return std::nullopt;
}

Derived deriveState(const std::vector<Event>& events) {
  Derived d;
  int resubmits = 0;
  for (const auto& e : events) {
    if (e.kind == Kind::Resubmitted) ++resubmits;
    d.attempt = std::max(d.attempt, e.attempt());
  }
  d.attempt = std::max(d.attempt, 1 + resubmits);
  d.state = d.attempt > 1 ? JobState::WAITING : JobState::SUBMITTED;
  for (const auto& e : events) {
    if (e.attempt() != d.attempt) continue;
    if (auto s = stateOf(e); s && precedence(*s) > precedence(d.state)) d.state = *s;
  }
  return d;
}

}  // namespace wms::lb
