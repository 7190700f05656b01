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

#include "wms/util/fs.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "wms/error.hpp"

namespace wms::util {

namespace {

[[noreturn]] void storageError(const std::string& what, const fs::path& p) {
  throw Error(Errc::StorageError, what + " '" + p.string() + "': " + std::strerror(errno));
}

void writeAll(int fd, std::string_view data, const fs::path& p) {
  const char* ptr = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    ssize_t n = ::write(fd, ptr, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      storageError("write", p);
    }
    ptr += n;
    left -= static_cast<std::size_t>(n);
  }
}

}  // namespace

std::string randomHex(std::size_t nchars) {
  thread_local std::mt19937_64 rng{std::random_device{}() ^
                                   (static_cast<std::uint64_t>(::getpid()) << 32)};
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(nchars, '0');
  for (auto& c : out) c = kHex[rng() & 0xf];
  return out;
}

void fsyncDir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd < 0) storageError("open dir", dir);
  ::fsync(fd);
  ::close(fd);
}

void writeFileAtomic(const fs::path& target, std::string_view data) {
  fs::path tmp = target.parent_path() / (".tmp." + randomHex(12));
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) storageError("create", tmp);
  try {
    writeAll(fd, data, tmp);
    if (::fsync(fd) != 0) storageError("fsync", tmp);
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), target.c_str()) != 0) {
    int saved = errno;
    ::unlink(tmp.c_str());
    errno = saved;
    storageError("rename", target);
  }
  fsyncDir(target.parent_path().empty() ? fs::path(".") : target.parent_path());
}

std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    errno = ENOENT;
    storageError("open", path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t appendDurable(const fs::path& path, std::string_view data) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) storageError("open", path);
  struct stat st{};
  ::fstat(fd, &st);
  auto offset = static_cast<std::uint64_t>(st.st_size);
  try {
    writeAll(fd, data, path);
    if (::fsync(fd) != 0) storageError("fsync", path);
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  return offset;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

FileLock::FileLock(const fs::path& path, bool createIfMissing) {
  int flags = O_RDONLY | O_CLOEXEC;
  if (createIfMissing) flags = O_RDWR | O_CREAT | O_CLOEXEC;
  fd_ = ::open(path.c_str(), flags, 0644);
  if (fd_ < 0) storageError("open for lock", path);
  while (::flock(fd_, LOCK_EX) != 0) {
    if (errno != EINTR) {
      ::close(fd_);
      storageError("flock", path);
    }
  }
}

FileLock::~FileLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace wms::util
