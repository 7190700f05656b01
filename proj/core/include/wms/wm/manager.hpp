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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>

#include "wms/broker/registry.hpp"
#include "wms/fsq/queue.hpp"
#include "wms/lb/store.hpp"
#include "wms/spool.hpp"
#include "wms/wm/request.hpp"

namespace wms::wm {

struct Config {
  fs::path spool;
  std::string strategy = "best";
  std::optional<std::uint64_t> seed;
  int noMatchRetries = 2;
  std::chrono::milliseconds noMatchBackoff{1000};
  int maxAttempts = 3;  // queue deliveries before dead-lettering a request
  std::chrono::milliseconds reconcileGrace{2000};
  std::chrono::milliseconds submitTimeout{300000};
  std::chrono::milliseconds pollInterval{50};
  std::chrono::milliseconds monitorInterval{250};
  std::int64_t registryTtlMs = broker::Registry::kDefaultTtlMs;
};

/// Source sequence numbers of events the WM logs for a given attempt.
enum class WmStage : int {
  Resubmitted = 0,
  Matched = 1,
  Staged = 2,
  Aborted = 3,
  Cancelled = 4,
  DagRunning = 5,
  DagDone = 6,
  Refused = 7,
};
inline std::int64_t wmSeq(int attempt, WmStage s) { return attempt * 100 + static_cast<int>(s); }

/// Single consumer of the wm-requests queue. Besides handling requests it
/// runs three periodic activities that only talk through the LB and queues:
/// the abort handler (automatic resubmission), the DAG engine, and a
/// reconciler that re-enqueues jobs left behind by crashes.
class WorkloadManager {
 public:
  explicit WorkloadManager(Config config);

  /// Startup recovery: reverts claims left by a previous WM process.
  void recover();
  /// Handles one queued request; false when the queue was empty.
  bool processOne();
  void handle(const Request& r);
  /// One pass of the periodic activities.
  void monitor();
  void run(const std::atomic<bool>& stop);

  lb::Store& store() { return store_; }
  fsq::Queue& requests() { return requests_; }

 private:
  void submit(const Request& r, std::string jdlText);
  void cancel(const Request& r);
  void startDag(const lb::JobRecord& rec, int attempt);
  void abortHandler(const lb::JobRecord& rec);
  void dagEngine(const lb::JobRecord& rec);
  void reconcile(const lb::JobRecord& rec, const std::set<std::string>& queued);
  void log(const std::string& jobId, lb::Kind kind, std::int64_t sseq, lb::Payload payload);
  void enqueueRequest(const Request& r);

  Config cfg_;
  Spool spool_;
  lb::Store store_;
  fsq::Queue requests_;
  fsq::Queue executorQueue_;
  broker::Registry registry_;
  std::string owner_;
  std::chrono::steady_clock::time_point lastMonitor_{};
};

}  // namespace wms::wm
