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
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace wms::lb {

enum class Source { UI, Gateway, WM, Broker, Executor, LogMonitor, JobWrapper };

enum class Kind {
  Registered,
  Accepted,
  Refused,
  Matched,
  Staged,
  Committed,
  Running,
  Chkpt,
  Done,
  Aborted,
  Cancelled,
  Resubmitted,
  Cleared,
  UserTag,
};

enum class JobState { SUBMITTED, WAITING, READY, SCHEDULED, RUNNING, DONE_OK, DONE_FAILED, ABORTED, CANCELLED, CLEARED };

std::string_view toString(Source s);
std::string_view toString(Kind k);
std::string_view toString(JobState s);
std::optional<Source> parseSource(std::string_view s);
std::optional<Kind> parseKind(std::string_view s);
/// Case-insensitive.
std::optional<JobState> parseJobState(std::string_view s);

bool isTerminal(JobState s);

using Payload = std::map<std::string, std::string>;

struct Event {
  std::string jobId;
  Source source = Source::WM;
  std::int64_t sourceSeq = 1;
  std::int64_t timestamp = 0;  // UTC ms
  Kind kind = Kind::Registered;
  Payload payload;

  /// The attempt an event belongs to: payload "attempt" when present.
  /// Untagged events belong to attempt 1.
  int attempt() const;
};

/// One line of an event file, fields in fixed order.
std::string toLine(const Event& e);
/// nullopt for lines that are not well-formed events.
std::optional<Event> fromLine(std::string_view line);

nlohmann::json toJson(const Event& e);
Event eventFromJson(const nlohmann::json& j);

struct Derived {
  JobState state = JobState::SUBMITTED;
  int attempt = 1;
  bool operator==(const Derived&) const = default;
};

/// Order-independent: the result depends only on the multiset of events.
/// The attempt is max(1 + #Resubmitted, highest attempt tag); the state is
/// the highest-precedence state among events of that attempt, with WAITING
/// as the baseline of every attempt after the first.
Derived deriveState(const std::vector<Event>& events);

/// State an event maps to, or nullopt for kinds that never change state.
std::optional<JobState> stateOf(const Event& e);

/// Total order used by deriveState.
int precedence(JobState s);

}  // namespace wms::lb
