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
#include <string>

namespace wms {

namespace fs = std::filesystem;

/// Directory layout shared by every daemon working on one spool root.
struct Spool {
  fs::path root;

  explicit Spool(fs::path r) : root(std::move(r)) {}

  fs::path lbStore() const { return root / "lbstore"; }
  fs::path wmRequests() const { return root / "wm-requests"; }
  fs::path executorSubmit() const { return root / "executor-submit"; }
  fs::path registry() const { return root / "registry"; }
  fs::path input(const std::string& jobId) const { return root / "input" / jobId; }
  fs::path output(const std::string& jobId) const { return root / "output" / jobId; }
  fs::path checkpoint(const std::string& jobId) const { return root / "checkpoint" / jobId; }
  fs::path executorDir() const { return root / "executor"; }
  fs::path jobLog() const { return executorDir() / "job.log"; }
  fs::path jobLogOffset() const { return executorDir() / "job.log.offset"; }
  fs::path executorJobs() const { return executorDir() / "jobs"; }
  fs::path scratch(const std::string& handle) const { return executorDir() / "run" / handle; }
  fs::path ledger() const { return root / "accounting" / "ledger.log"; }
  fs::path accounts() const { return root / "accounting" / "accounts.ad"; }
  /// host:port of the running gateway, written at gateway startup.
  fs::path gatewayAddress() const { return root / "gateway.addr"; }
};

}  // namespace wms
