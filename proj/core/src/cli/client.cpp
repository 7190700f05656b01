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

#include "wms/cli/client.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <ostream>
#include <thread>

#include "wms/error.hpp"

namespace wms::cli {

std::string resolveGateway(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("WMS_GATEWAY"); env && *env) return env;
  return "127.0.0.1:7846";
}

std::string resolveUser(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  for (const char* var : {"WMS_USER", "USER"})
    if (const char* env = std::getenv(var); env && *env) return env;
  return "anonymous";
}

namespace {
net::Socket dial(const std::string& hostPort) {
  auto [host, port] = net::splitHostPort(hostPort);
  return net::connectTcp(host, port);
}
}  // namespace

Client::Client(const std::string& hostPort, std::string user)
    : sock_(dial(hostPort)), reader_(sock_.fd()), user_(std::move(user)) {}

nlohmann::json Client::call(const std::string& cmd, const nlohmann::json& args) {
  const std::string id = std::to_string(nextId_++);
  nlohmann::json req{{"id", id}, {"cmd", cmd}, {"user", user_}, {"args", args}};
  if (!net::writeAll(sock_.fd(), req.dump() + "\n")) throw Error(Errc::TransportError, "gateway connection lost");
  auto line = reader_.readLine();
  if (!line) throw Error(Errc::TransportError, "gateway closed the connection");
  auto resp = nlohmann::json::parse(*line, nullptr, false);
  if (!resp.is_object() || resp.value("id", std::string()) != id)
    throw Error(Errc::TransportError, "malformed gateway response");
  const auto& body = resp["body"];
  if (resp.value("status", std::string()) != "ok") {
    auto code = errcFromString(body.value("code", std::string())).value_or(Errc::BadRequest);
    std::string msg = body.value("message", std::string("request failed"));
    throw Error(code, msg);
  }
  return body;
}

void bridgeSession(const net::Socket& conn, int inFd, std::ostream& out, std::ostream& err) {
  std::atomic<bool> done{false};
  std::thread input([&] {
    char buf[8192];
    while (!done.load()) {
      pollfd pfd{inFd, POLLIN, 0};
      int rc = ::poll(&pfd, 1, 100);
      if (rc == 0) continue;
      if (rc < 0 && errno == EINTR) continue;
      ssize_t n = rc < 0 ? -1 : ::read(inFd, buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        net::writeAll(conn.fd(), net::encodeFrame(net::kStdin, ""));
        break;
      }
      if (!net::writeAll(conn.fd(), net::encodeFrame(net::kStdin, std::string_view(buf, static_cast<std::size_t>(n)))))
        break;
    }
  });
  net::FrameDecoder dec;
  char buf[8192];
  for (;;) {
    ssize_t n = ::recv(conn.fd(), buf, sizeof buf, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    dec.feed(std::string_view(buf, static_cast<std::size_t>(n)));
    try {
      while (auto f = dec.next()) {
        if (f->stream == net::kStdout) out.write(f->data.data(), static_cast<std::streamsize>(f->data.size())).flush();
        else if (f->stream == net::kStderr) err.write(f->data.data(), static_cast<std::streamsize>(f->data.size())).flush();
      }
    } catch (const Error& e) {
      err << "wms: " << e.what() << "\n";
      break;
    }
  }
  done = true;
  input.join();
}

}  // namespace wms::cli
