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
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wms::fsq {

namespace fs = std::filesystem;

struct QueueItem {
  std::uint64_t seq = 0;
  std::string payload;
  int attempts = 0;
  std::string owner;  // empty while unclaimed
};

enum class Disposition { Ack, Nack };

/// The mutating file operations a queue performs. Each call is one step of
/// the durability protocol; tests substitute an implementation that stops
/// after N steps to simulate a crash.
class FileOps {
 public:
  virtual ~FileOps() = default;
  /// Create `path` exclusively, write `data`, fsync.
  virtual void writeNew(const fs::path& path, std::string_view data) = 0;
  /// Atomic rename; false when `from` no longer exists.
  virtual bool rename(const fs::path& from, const fs::path& to) = 0;
  /// Atomic rename that never replaces; false when `to` already exists.
  virtual bool renameNoReplace(const fs::path& from, const fs::path& to) = 0;
  virtual bool remove(const fs::path& path) = 0;
  virtual void syncDir(const fs::path& dir) = 0;
};

std::shared_ptr<FileOps> posixFileOps();

/// Crash-safe FIFO queue, one file per message. Layout:
///   <root>/SEQ, <root>/<seq>.msg, <root>/<seq>.claimed.<owner>, <root>/.tmp.<random>
/// Safe for multiple producer and consumer processes on one directory.
class Queue {
 public:
  explicit Queue(fs::path root, std::shared_ptr<FileOps> ops = posixFileOps());

  const fs::path& root() const { return root_; }

  /// Durable on return. Payload must be a JSON object.
  std::uint64_t enqueue(std::string_view payload);
  /// Oldest unclaimed item, now owned by `owner`; nullopt when empty.
  std::optional<QueueItem> claim(std::string_view owner);
  /// Ack deletes; Nack returns the item to its FIFO slot. Throws Error(NotClaimed).
  void settle(std::uint64_t seq, Disposition disposition);
  /// Removes orphan temporaries and reverts claims older than `staleAfter`.
  std::size_t recoverScan(std::chrono::seconds staleAfter);
  /// Snapshot of every item, claimed or not, in seq order.
  std::vector<QueueItem> list() const;
  std::size_t size() const { return list().size(); }

  static constexpr std::chrono::seconds kDefaultStaleAfter{60};

 private:
  std::uint64_t nextSeq();

  fs::path root_;
  std::shared_ptr<FileOps> ops_;
};

/// Zero-padded 16 digit sequence number used in file names.
std::string seqName(std::uint64_t seq);

}  // namespace wms::fsq
