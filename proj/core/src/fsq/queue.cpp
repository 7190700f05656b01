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

#include "wms/fsq/queue.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>

#include <nlohmann/json.hpp>

#include "wms/error.hpp"
#include "wms/util/fs.hpp"

namespace wms::fsq {

namespace {

[[noreturn]] void storageError(const std::string& what, const fs::path& p) {
  throw Error(Errc::StorageError, what + " '" + p.string() + "': " + std::strerror(errno));
}

class PosixFileOps final : public FileOps {
 public:
  void writeNew(const fs::path& path, std::string_view data) override {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
    if (fd < 0) storageError("create", path);
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
      ssize_t n = ::write(fd, p, left);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) {
        ::close(fd);
        storageError("write", path);
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
      ::close(fd);
      storageError("fsync", path);
    }
    ::close(fd);
  }

  bool rename(const fs::path& from, const fs::path& to) override {
    if (::rename(from.c_str(), to.c_str()) == 0) return true;
    if (errno == ENOENT) return false;
    storageError("rename", from);
  }

  bool renameNoReplace(const fs::path& from, const fs::path& to) override {
    if (::renameat2(AT_FDCWD, from.c_str(), AT_FDCWD, to.c_str(), RENAME_NOREPLACE) == 0) return true;
    if (errno == EEXIST) return false;
    storageError("rename", from);
  }

  bool remove(const fs::path& path) override {
    if (::unlink(path.c_str()) == 0) return true;
    if (errno == ENOENT) return false;
    storageError("unlink", path);
  }

  void syncDir(const fs::path& dir) override { util::fsyncDir(dir); }
};

constexpr std::string_view kEnvelopeHead = R"({"attempts":)";
constexpr std::string_view kEnvelopeMid = R"(,"payload":)";

std::string envelope(int attempts, std::string_view payload) {
  std::string out;
  out.reserve(payload.size() + 40);
  out += kEnvelopeHead;
  out += std::to_string(attempts);
  out += kEnvelopeMid;
  out += payload;
  out += '}';
  return out;
}

std::optional<std::pair<int, std::string>> openEnvelope(const std::string& file) {
  if (file.compare(0, kEnvelopeHead.size(), kEnvelopeHead) != 0) return std::nullopt;
  std::size_t pos = kEnvelopeHead.size();
  std::size_t digitsEnd = pos;
  while (digitsEnd < file.size() && std::isdigit(static_cast<unsigned char>(file[digitsEnd]))) ++digitsEnd;
  if (digitsEnd == pos) return std::nullopt;
  int attempts = std::stoi(file.substr(pos, digitsEnd - pos));
  if (file.compare(digitsEnd, kEnvelopeMid.size(), kEnvelopeMid) != 0) return std::nullopt;
  std::size_t start = digitsEnd + kEnvelopeMid.size();
  if (file.size() < start + 1 || file.back() != '}') return std::nullopt;
  return std::make_pair(attempts, file.substr(start, file.size() - start - 1));
}

struct Entry {
  std::uint64_t seq;
  std::string owner;  // empty for .msg
  fs::path path;
};

// Parses `<16 digits>.msg` or `<16 digits>.claimed.<owner>`.
std::optional<Entry> parseName(const fs::path& p) {
  std::string name = p.filename().string();
  if (name.size() < 17 || name[16] != '.') return std::nullopt;
  for (int i = 0; i < 16; ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
  Entry e{std::stoull(name.substr(0, 16)), "", p};
  std::string rest = name.substr(17);
  if (rest == "msg") return e;
  constexpr std::string_view kClaimed = "claimed.";
  if (rest.compare(0, kClaimed.size(), kClaimed) == 0 && rest.size() > kClaimed.size()) {
    e.owner = rest.substr(kClaimed.size());
    return e;
  }
  return std::nullopt;
}

std::vector<Entry> scan(const fs::path& root) {
  std::vector<Entry> out;
  std::error_code ec;
  for (const auto& de : fs::directory_iterator(root, ec)) {
    if (auto e = parseName(de.path())) out.push_back(std::move(*e));
  }
  if (ec) throw Error(Errc::StorageError, "scan '" + root.string() + "': " + ec.message());
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) { return a.seq < b.seq; });
  return out;
}

std::optional<std::string> tryRead(const fs::path& p) {
  try {
    return util::readFile(p);
  } catch (const Error&) {
    return std::nullopt;
  }
}

double ageSeconds(const fs::path& p) {
  struct stat st{};
  if (::stat(p.c_str(), &st) != 0) return 0.0;
  timespec now{};
  ::clock_gettime(CLOCK_REALTIME, &now);
  return static_cast<double>(now.tv_sec - st.st_mtim.tv_sec) +
         static_cast<double>(now.tv_nsec - st.st_mtim.tv_nsec) / 1e9;
}

}  // namespace

std::shared_ptr<FileOps> posixFileOps() {
  static auto ops = std::make_shared<PosixFileOps>();
  return ops;
}

std::string seqName(std::uint64_t seq) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llu", static_cast<unsigned long long>(seq));
  return buf;
}

Queue::Queue(fs::path root, std::shared_ptr<FileOps> ops) : root_(std::move(root)), ops_(std::move(ops)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw Error(Errc::StorageError, "create queue '" + root_.string() + "': " + ec.message());
}

std::uint64_t Queue::nextSeq() {
  std::uint64_t seq = 0;
  if (auto text = tryRead(root_ / "SEQ")) {
    try {
      seq = std::stoull(*text);
    } catch (...) {
      seq = 0;
    }
  }
  for (const auto& e : scan(root_)) seq = std::max(seq, e.seq);
  ++seq;
  fs::path tmp = root_ / (".tmp." + util::randomHex(12));
  ops_->writeNew(tmp, std::to_string(seq));
  ops_->rename(tmp, root_ / "SEQ");
  return seq;
}

std::uint64_t Queue::enqueue(std::string_view payload) {
  if (!nlohmann::json::accept(payload) || payload.empty() || payload.find_first_not_of(" \t\r\n") == std::string_view::npos ||
      payload[payload.find_first_not_of(" \t\r\n")] != '{')
    throw Error(Errc::BadRequest, "queue payload must be a JSON object");

  fs::path tmp = root_ / (".tmp." + util::randomHex(12));
  ops_->writeNew(tmp, envelope(0, payload));

  util::FileLock lock(root_);
  for (;;) {
    std::uint64_t seq = nextSeq();
    if (ops_->renameNoReplace(tmp, root_ / (seqName(seq) + ".msg"))) {
      ops_->syncDir(root_);
      return seq;
    }
  }
}

std::optional<QueueItem> Queue::claim(std::string_view owner) {
  if (owner.empty() || owner.find('/') != std::string_view::npos)
    throw Error(Errc::BadRequest, "invalid claim owner '" + std::string(owner) + "'");
  for (const auto& e : scan(root_)) {
    if (!e.owner.empty()) continue;
    fs::path claimed = root_ / (seqName(e.seq) + ".claimed." + std::string(owner));
    if (!ops_->rename(e.path, claimed)) continue;  // another consumer won
    auto text = tryRead(claimed);
    auto env = text ? openEnvelope(*text) : std::nullopt;
    if (!env) {
      // Unreadable message: keep it claimed so recovery surfaces it, skip.
      continue;
    }
    QueueItem item{e.seq, std::move(env->second), env->first + 1, std::string(owner)};
    fs::path tmp = root_ / (".tmp." + util::randomHex(12));
    ops_->writeNew(tmp, envelope(item.attempts, item.payload));
    ops_->rename(tmp, claimed);
    ops_->syncDir(root_);
    return item;
  }
  return std::nullopt;
}

void Queue::settle(std::uint64_t seq, Disposition disposition) {
  for (const auto& e : scan(root_)) {
    if (e.seq != seq || e.owner.empty()) continue;
    if (disposition == Disposition::Ack) {
      ops_->remove(e.path);
    } else {
      ops_->rename(e.path, root_ / (seqName(seq) + ".msg"));
    }
    ops_->syncDir(root_);
    return;
  }
  throw Error(Errc::NotClaimed, "item " + seqName(seq) + " is not claimed in " + root_.string());
}

std::size_t Queue::recoverScan(std::chrono::seconds staleAfter) {
  const double limit = static_cast<double>(staleAfter.count());
  std::size_t recovered = 0;
  std::error_code ec;
  for (const auto& de : fs::directory_iterator(root_, ec)) {
    std::string name = de.path().filename().string();
    if (name.rfind(".tmp.", 0) == 0 && ageSeconds(de.path()) >= limit) ops_->remove(de.path());
  }
  for (const auto& e : scan(root_)) {
    if (e.owner.empty() || ageSeconds(e.path) < limit) continue;
    if (ops_->rename(e.path, root_ / (seqName(e.seq) + ".msg"))) ++recovered;
  }
  ops_->syncDir(root_);
  return recovered;
}

std::vector<QueueItem> Queue::list() const {
  std::vector<QueueItem> out;
  for (const auto& e : scan(root_)) {
    auto text = tryRead(e.path);
    if (!text) continue;
    auto env = openEnvelope(*text);
    if (!env) continue;
    out.push_back({e.seq, std::move(env->second), env->first, e.owner});
  }
  return out;
}

}  // namespace wms::fsq
