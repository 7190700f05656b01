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
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "wms/net/net.hpp"

namespace wms::cli {

/// `--gateway` value, else WMS_GATEWAY, else 127.0.0.1:7846.
std::string resolveGateway(const std::optional<std::string>& flag);
/// `--user` value, else WMS_USER, else USER, else "anonymous".
std::string resolveUser(const std::optional<std::string>& flag);

/// One connection to the gateway; requests are answered in order.
class Client {
 public:
  /// Throws Error(TransportError).
  Client(const std::string& hostPort, std::string user);

  /// Returns the response body. Error responses are rethrown as Error with
  /// the gateway's code; connection problems as Error(TransportError).
  nlohmann::json call(const std::string& cmd, const nlohmann::json& args = nlohmann::json::object());

 private:
  net::Socket sock_;
  net::LineReader reader_;
  std::string user_;
  std::uint64_t nextId_ = 1;
};

/// Bridges a connected interactive job: bytes read from `inFd` go out as
/// stdin frames (an empty frame marks EOF), stdout/stderr frames are
/// written to `out`/`err`. Returns when the job side closes the connection.
void bridgeSession(const net::Socket& conn, int inFd, std::ostream& out, std::ostream& err);

}  // namespace wms::cli
