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
#include <cstddef>
#include <map>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "wms/fsq/queue.hpp"
#include "wms/lb/store.hpp"
#include "wms/spool.hpp"

namespace wms::gateway {

inline constexpr int kDefaultPort = 7846;
inline constexpr std::size_t kChunkSize = 64 * 1024;

struct Config {
  fs::path spool;
  std::string host = "127.0.0.1";
  int port = kDefaultPort;
};

/// Generates `wms-<YYYYMMDD>-<6 hex>`.
std::string newJobId();

/// Network server. `handle` maps one request object to its response and is
/// safe to call from many connection threads at once.
class Gateway {
 public:
  explicit Gateway(Config config);

  nlohmann::json handle(const nlohmann::json& request);
  /// Never throws: malformed lines get an error response with an empty id.
  std::string handleLine(const std::string& line);

  /// Binds, publishes the address in the spool and serves until `stop`.
  void serve(const std::atomic<bool>& stop);
  int boundPort() const { return boundPort_.load(); }

 private:
  using Args = nlohmann::json;
  nlohmann::json dispatch(const std::string& cmd, const std::string& user, const Args& args);

  nlohmann::json submit(const std::string& user, const Args& args, bool dag, bool pending);
  nlohmann::json start(const std::string& user, const Args& args);
  nlohmann::json cancel(const std::string& user, const Args& args);
  nlohmann::json status(const Args& args);
  nlohmann::json query(const Args& args);
  nlohmann::json getState(const Args& args);
  nlohmann::json saveState(const Args& args);
  nlohmann::json outputList(const Args& args);
  nlohmann::json outputGet(const Args& args);
  nlohmann::json sandboxPut(const Args& args);
  nlohmann::json resources();
  nlohmann::json accountBalance(const Args& args);
  nlohmann::json accountTransfer(const Args& args);
  nlohmann::json mergeStates(const Args& args);
  nlohmann::json resubmit(const std::string& user, const Args& args);

  void enqueueStart(const lb::JobRecord& rec);
  lb::JobRecord ownedRecord(const std::string& user, const std::string& jobId) const;

  Config cfg_;
  Spool spool_;
  lb::Store store_;
  fsq::Queue requests_;
  std::mutex uploadMu_;
  std::map<std::string, std::int64_t> nextChunk_;  // "<jobId>/<name>" -> expected seq
  std::atomic<int> boundPort_{0};
};

}  // namespace wms::gateway
