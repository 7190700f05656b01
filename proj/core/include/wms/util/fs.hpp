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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace wms::util {

namespace fs = std::filesystem;

/// Writes `data` to a `.tmp.<random>` sibling, fsyncs it, renames it over
/// `target` and fsyncs the directory. Throws Error(StorageError).
void writeFileAtomic(const fs::path& target, std::string_view data);

std::string readFile(const fs::path& path);

/// Appends bytes with O_APPEND and fsync; returns the offset the write began at.
std::uint64_t appendDurable(const fs::path& path, std::string_view data);

void fsyncDir(const fs::path& dir);

std::string randomHex(std::size_t nchars);

/// Lowercase ASCII copy.
std::string lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Directory or file advisory lock held for the object's lifetime (flock).
class FileLock {
 public:
  explicit FileLock(const fs::path& path, bool createIfMissing = false);
  ~FileLock();
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

}  // namespace wms::util
