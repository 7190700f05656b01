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
#include <functional>
#include <optional>

#include "wms/executor/job_log.hpp"
#include "wms/lb/store.hpp"
#include "wms/spool.hpp"

namespace wms::executor {

/// The LB event a job log record turns into; nullopt for records that do
/// not move the job state machine (Staged). `sseq` is the record's byte
/// offset plus one, so replays of the same record are duplicates.
std::optional<lb::Event> translate(const LogRecord& r, std::uint64_t offset);

/// Called for every forwarded Terminated record, before the offset moves.
using TerminatedHook = std::function<void(const LogRecord&)>;

/// Forwards complete records after the persisted offset. A torn final line
/// is left for the next call. Returns the number of events forwarded.
std::size_t tailAndTranslate(const fs::path& logPath, const fs::path& offsetPath, lb::Store& store,
                             const TerminatedHook& onTerminated = {});

/// Charges the job owner for a Terminated record using the CE's OwnerGroup
/// and PricePerCpuSecond from the registry. No-op without an accounts file.
class Charger {
 public:
  explicit Charger(const Spool& spool) : spool_(spool) {}
  void operator()(const LogRecord& r, const lb::Store& store) const;

 private:
  Spool spool_;
};

struct LogMonitorConfig {
  fs::path spool;
  std::chrono::milliseconds pollInterval{100};
};

void runLogMonitor(const LogMonitorConfig& cfg, const std::atomic<bool>& stop);

}  // namespace wms::executor
