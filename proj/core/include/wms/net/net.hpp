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

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace wms::net {

/// Interactive stream ids.
inline constexpr std::uint8_t kStdin = 0;
inline constexpr std::uint8_t kStdout = 1;
inline constexpr std::uint8_t kStderr = 2;
inline constexpr std::uint32_t kMaxFrame = 1u << 24;

struct Frame {
  std::uint8_t stream = 0;
  std::string data;
  bool operator==(const Frame&) const = default;
};

/// 1 byte stream id, 4 byte big-endian length, payload.
std::string encodeFrame(std::uint8_t stream, std::string_view data);

/// Reassembles frames from arbitrarily split input.
class FrameDecoder {
 public:
  void feed(std::string_view bytes) { buf_.append(bytes); }
  /// Throws Error(CorruptRecord) for a length above kMaxFrame.
  std::optional<Frame> next();
  std::size_t buffered() const { return buf_.size() - pos_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

/// "host:port"; throws Error(BadRequest).
std::pair<std::string, int> splitHostPort(std::string_view s);

/// Owning socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  ~Socket();
  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void shutdownWrite();
  void close();

 private:
  int fd_ = -1;
};

/// Throws Error(TransportError).
Socket connectTcp(const std::string& host, int port, std::chrono::milliseconds timeout = std::chrono::seconds(5));
/// Port 0 picks a free port; returns the socket and the bound port.
std::pair<Socket, int> listenTcp(const std::string& host, int port);
/// Waits for one connection; nullopt on timeout.
std::optional<Socket> acceptWithin(const Socket& listener, std::chrono::milliseconds timeout);

bool writeAll(int fd, std::string_view data);

/// Buffered newline-delimited reader.
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}
  /// Line without its '\n'; nullopt at EOF or error. Lines longer than
  /// maxLine throw Error(BadRequest).
  std::optional<std::string> readLine(std::size_t maxLine = 64u << 20);

 private:
  int fd_;
  std::string buf_;
  std::size_t scanned_ = 0;
};

}  // namespace wms::net
