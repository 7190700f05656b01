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

#include <sys/types.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "wms/executor/job_log.hpp"
#include "wms/fsq/queue.hpp"
#include "wms/spool.hpp"
#include "wms/wm/adapter.hpp"

namespace wms::executor {

struct Config {
  fs::path spool;
  fs::path binDir;  // prepended to the job's PATH (wms-chkpt lives here)
  std::chrono::milliseconds commitTimeout{30000};
  std::chrono::milliseconds heartbeatInterval{2000};
  std::chrono::milliseconds pollInterval{50};
  std::chrono::milliseconds interactiveConnectTimeout{30000};
  /// Reported instead of the measured wall-clock time, for reproducible charges.
  std::optional<double> fakeCpuSeconds;
};

struct StagedJob {
  std::string handle;
  wm::SubmissionDescriptor descriptor;
  bool committed = false;
  std::int64_t stagedAt = 0;
};

/// Persistent two-phase job queue plus the simulated compute elements that
/// run committed jobs as local processes. CE slots come from the TotalCPUs
/// of the CE ads found in the spool registry.
class Executor {
 public:
  explicit Executor(Config config);
  /// Kills running wrappers without recording an outcome, like a crash would.
  ~Executor();

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  static std::string handleFor(const std::string& idemKey);

  /// Rebuilds job states from the job files and the log. Jobs that were
  /// executing when the previous process died are recorded as Aborted.
  void recover();

  /// Phase one. Idempotent on idemKey. Throws Error(BadRequest).
  std::string stage(const wm::SubmissionDescriptor& d, const std::string& idemKey);
  /// Phase two. Throws Error(UnknownHandle).
  void commit(const std::string& handle);
  /// Throws Error(UnknownHandle), Error(AlreadyTerminal).
  void cancel(const std::string& handle);

  /// Handles one executor-submit queue item; false when the queue was empty.
  bool processOne();
  /// Starts runnable jobs on free slots.
  void schedule();
  /// Aborts staged jobs left uncommitted past commitTimeout.
  std::size_t gc();
  /// Refreshes CE FreeCPUs and SE freshness in the registry.
  void heartbeat();
  void run(const std::atomic<bool>& stop);

  std::optional<LogKind> lastRecord(const std::string& handle) const;
  std::size_t runningOn(const std::string& ceId) const;
  std::size_t slotsOf(const std::string& ceId) const;
  /// True when no job is queued or running.
  bool idle() const;
  bool waitIdle(std::chrono::milliseconds timeout);
  JobLog& log() { return log_; }

 private:
  struct Entry {
    StagedJob job;
    LogKind last = LogKind::Staged;
    bool running = false;
    pid_t pgid = 0;
    bool cancelRequested = false;
  };

  void persist(const StagedJob& j);
  LogRecord record(const StagedJob& j, LogKind kind, std::map<std::string, std::string> data = {});
  void wrapper(std::string handle);
  void finish(const std::string& handle, LogKind kind, std::map<std::string, std::string> data);

  Config cfg_;
  Spool spool_;
  JobLog log_;
  fsq::Queue queue_;
  std::map<std::string, std::size_t> slots_;  // ceId -> slots

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Entry> jobs_;
  std::deque<std::string> runQueue_;
  std::map<std::string, std::size_t> running_;
  std::size_t activeWrappers_ = 0;
  bool stopping_ = false;
  bool slotsChanged_ = true;
  std::chrono::steady_clock::time_point lastHeartbeat_{};
  std::chrono::steady_clock::time_point lastGc_{};
};

}  // namespace wms::executor
