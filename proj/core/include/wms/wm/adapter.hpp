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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "wms/broker/broker.hpp"
#include "wms/jdl/job.hpp"
#include "wms/lb/store.hpp"
#include "wms/spool.hpp"

namespace wms::wm {

/// What the executor needs to run one attempt of a job. The wrapper
/// contract: create scratch dir, import input sandbox, export env, run the
/// command with stdio redirection, collect output sandbox, report exit code.
struct SubmissionDescriptor {
  std::string jobId;
  int attempt = 1;
  std::string owner;
  std::string finalJdl;  // contains SubmitTo
  std::string ceId;
  std::optional<std::string> seId;
  std::string jobType;
  std::string executable;
  std::string arguments;
  std::optional<std::string> stdInput;
  std::optional<std::string> stdOutput;
  std::optional<std::string> stdError;
  std::vector<std::string> inputSandbox;
  std::vector<std::string> outputSandbox;
  std::string sandboxDir;  // where input sandbox files are read from
  std::string outputDir;   // where output sandbox files go
  std::map<std::string, std::string> env;
  std::optional<jdl::Listener> listener;

  /// Staging idempotency key: one executor job per (job, attempt).
  std::string idemKey() const { return jobId + "/" + std::to_string(attempt); }
};

nlohmann::json toJson(const SubmissionDescriptor& d);
/// Throws Error(BadRequest).
SubmissionDescriptor descriptorFromJson(const nlohmann::json& j);

struct AdaptContext {
  std::string jobId;
  int attempt = 1;
  std::string owner;
  fs::path spoolRoot;
  std::string sandboxFrom;                  // job whose input spool holds the sandbox
  std::optional<std::string> checkpointIn;  // restore file for WMS_CHECKPOINT_IN
};

/// Throws Error(ValidationFailed) if the JDL is invalid or lacks SubmitTo,
/// Error(MissingSandboxFile) for manifest entries absent from the spool.
SubmissionDescriptor adaptJob(std::string_view resolvedJdl, const AdaptContext& ctx);

/// Materializes a restore file (`var=value` per line) and returns its path.
fs::path writeCheckpointFile(const Spool& spool, const std::string& jobId, int attempt, const lb::StatePairs& pairs);
lb::StatePairs readCheckpointFile(const fs::path& file);

/// JDL text in, JDL or descriptor text out.
class Helper {
 public:
  virtual ~Helper() = default;
  virtual std::string resolve(std::string_view input) = 0;
};

/// Adds SubmitTo (and ChosenSE). Throws Error(NoMatchingResources) and friends.
class BrokerHelper final : public Helper {
 public:
  BrokerHelper(broker::Snapshot snapshot, broker::SelectOptions options)
      : snapshot_(std::move(snapshot)), options_(std::move(options)) {}
  std::string resolve(std::string_view jdlText) override;
  const std::optional<broker::MatchResult>& lastMatch() const { return last_; }

 private:
  broker::Snapshot snapshot_;
  broker::SelectOptions options_;
  std::optional<broker::MatchResult> last_;
};

/// Turns resolved JDL into a descriptor (JSON text).
class AdapterHelper final : public Helper {
 public:
  explicit AdapterHelper(AdaptContext ctx) : ctx_(std::move(ctx)) {}
  std::string resolve(std::string_view resolvedJdl) override;

 private:
  AdaptContext ctx_;
};

/// Broker then Adapter; every intermediate result is re-validated.
SubmissionDescriptor runHelperChain(std::string_view jdlText, BrokerHelper& broker, AdapterHelper& adapter);

}  // namespace wms::wm
