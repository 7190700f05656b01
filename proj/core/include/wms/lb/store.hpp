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

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wms/lb/event.hpp"

namespace wms::lb {

namespace fs = std::filesystem;

using StatePairs = std::vector<std::pair<std::string, std::string>>;

struct CheckpointState {
  std::int64_t seq = 0;
  StatePairs pairs;
};

struct JobRecord {
  std::string jobId;
  std::string owner;
  std::string jdl;
  JobState state = JobState::SUBMITTED;
  int attempt = 1;
  std::optional<std::string> destination;
  std::optional<int> exitCode;
  std::map<std::string, std::string> userTags;
  std::vector<CheckpointState> checkpointStates;
  std::vector<Event> events;  // arrival order, duplicates removed
};

/// Builds a record from a job's events.
JobRecord buildRecord(const std::string& jobId, const std::vector<Event>& events);

struct Predicate {
  std::string field;  // owner | state | destination | tag:<name>
  std::vector<std::string> values;
};
using Query = std::vector<Predicate>;

/// Parses "field=v1|v2,field2=v3". Throws Error(BadQuery).
Query parseQuery(std::string_view text);
bool matches(const JobRecord& r, const Query& q);

/// Event-sourced job store: lbstore/<shard>/<jobId>.events. Several
/// processes may share one root; appends to a job file are serialized
/// with flock and readers always see whole lines.
class Store {
 public:
  explicit Store(fs::path root);

  const fs::path& root() const { return root_; }

  /// True when appended, false for an ignored duplicate. Throws Error(UnknownJob).
  bool logEvent(Event e);

  bool exists(const std::string& jobId) const;
  /// Throws Error(UnknownJob).
  JobRecord record(const std::string& jobId) const;
  std::optional<JobRecord> find(const std::string& jobId) const;
  std::vector<std::string> jobIds() const;

  /// Ascending jobId. Throws Error(BadQuery).
  std::vector<std::string> query(const Query& q) const;

  /// Appends a checkpoint state (and its Chkpt event). Returns the new seq.
  std::int64_t saveState(const std::string& jobId, const StatePairs& pairs);
  /// Highest seq when `seq` is absent. Throws Error(NoSuchState) / Error(UnknownJob).
  StatePairs getState(const std::string& jobId, std::optional<std::int64_t> seq = std::nullopt) const;

  /// Drops cached records; the next read replays every event file.
  void rebuildIndex();

  fs::path eventFile(const std::string& jobId) const;

 private:
  std::vector<Event> readEvents(const fs::path& file) const;
  void append(const fs::path& file, const Event& e);

  struct Cached {
    std::uintmax_t size = 0;
    JobRecord record;
  };

  fs::path root_;
  mutable std::mutex mu_;
  mutable std::unordered_map<std::string, Cached> cache_;
};

/// Two hex characters derived from the job id.
std::string shardOf(const std::string& jobId);

}  // namespace wms::lb
