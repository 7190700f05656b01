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
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace wms::executor {

namespace fs = std::filesystem;

enum class LogKind { Staged, Committed, Executing, Terminated, Aborted, Cancelled };

std::string_view toString(LogKind k);
/// Throws Error(CorruptRecord).
LogKind parseLogKind(std::string_view s);
bool isTerminal(LogKind k);

struct LogRecord {
  std::int64_t ts = 0;
  std::string handle;
  std::string jobId;
  LogKind kind = LogKind::Staged;
  std::map<std::string, std::string> data;  // attempt, exitCode, ceId, reason, ...

  int attempt() const;
};

std::string toLine(const LogRecord& r);
/// Throws Error(CorruptRecord).
LogRecord recordFromLine(std::string_view line);

/// Append-only job log, one JSON record per line. Appends within a process
/// go through one mutex and timestamps never decrease.
class JobLog {
 public:
  explicit JobLog(fs::path path);

  /// Fills in ts. Returns the byte offset the record starts at.
  std::uint64_t append(LogRecord& r);
  /// Every well-formed complete record; corrupt lines are skipped.
  std::vector<LogRecord> readAll() const;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
  std::mutex mu_;
  std::int64_t lastTs_ = 0;
};

}  // namespace wms::executor
