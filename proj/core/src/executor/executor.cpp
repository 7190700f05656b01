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

#include "wms/executor/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/prctl.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <csignal>
#include <cstring>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "wms/broker/registry.hpp"
#include "wms/error.hpp"
#include "wms/net/net.hpp"
#include "wms/util/crash.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"

extern char** environ;

namespace wms::executor {

namespace {

std::string shellQuote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

std::optional<fs::path> searchPath(const std::string& name, const std::string& path) {
  std::size_t pos = 0;
  while (pos <= path.size()) {
    auto colon = path.find(':', pos);
    std::string dir = path.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
    if (!dir.empty()) {
      fs::path cand = fs::path(dir) / name;
      if (::access(cand.c_str(), X_OK) == 0 && !fs::is_directory(cand)) return cand;
    }
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  return std::nullopt;
}

void copyAtomic(const fs::path& from, const fs::path& to) {
  fs::create_directories(to.parent_path());
  fs::path tmp = to.parent_path() / (".tmp." + util::randomHex(12));
  fs::copy_file(from, tmp, fs::copy_options::overwrite_existing);
  fs::rename(tmp, to);
}

nlohmann::json jobToJson(const StagedJob& j) {
  return {{"handle", j.handle},
          {"descriptor", wm::toJson(j.descriptor)},
          {"committed", j.committed},
          {"stagedAt", j.stagedAt}};
}

StagedJob jobFromJson(const nlohmann::json& j) {
  StagedJob s;
  s.handle = j.at("handle").get<std::string>();
  s.descriptor = wm::descriptorFromJson(j.at("descriptor"));
  s.committed = j.at("committed").get<bool>();
  s.stagedAt = j.at("stagedAt").get<std::int64_t>();
  return s;
}

// Copies job output from a pipe to the interactive channel, one frame per read.
void pumpToSocket(int from, std::uint8_t stream, int sock, std::mutex& sendMu, bool& connected) {
  char buf[8192];
  for (;;) {
    ssize_t n = ::read(from, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    std::lock_guard lock(sendMu);
    if (connected && !net::writeAll(sock, net::encodeFrame(stream, std::string_view(buf, static_cast<std::size_t>(n)))))
      connected = false;
  }
  ::close(from);
}

}  // namespace

Executor::Executor(Config config)
    : cfg_(std::move(config)), spool_(cfg_.spool), log_(spool_.jobLog()), queue_(spool_.executorSubmit()) {
  fs::create_directories(spool_.executorJobs());
  broker::Registry reg(spool_.registry());
  for (const auto& r : reg.all()) {
    if (!r.isCE) continue;
    auto total = r.ad.getInteger("TotalCPUs");
    slots_[r.id] = static_cast<std::size_t>(std::max<std::int64_t>(1, total.value_or(1)));
  }
}

Executor::~Executor() {
  std::unique_lock lock(mu_);
  stopping_ = true;
  for (auto& [h, e] : jobs_)
    if (e.running && e.pgid > 0) ::kill(-e.pgid, SIGKILL);
  cv_.wait(lock, [&] { return activeWrappers_ == 0; });
}

std::string Executor::handleFor(const std::string& idemKey) {
  std::string h = idemKey;
  std::replace(h.begin(), h.end(), '/', '_');
  return h;
}

void Executor::persist(const StagedJob& j) {
  util::writeFileAtomic(spool_.executorJobs() / (j.handle + ".json"), jobToJson(j).dump());
}

LogRecord Executor::record(const StagedJob& j, LogKind kind, std::map<std::string, std::string> data) {
  LogRecord r;
  r.handle = j.handle;
  r.jobId = j.descriptor.jobId;
  r.kind = kind;
  r.data = std::move(data);
  r.data["attempt"] = std::to_string(j.descriptor.attempt);
  r.data.emplace("ceId", j.descriptor.ceId);
  return r;
}

void Executor::recover() {
  queue_.recoverScan(std::chrono::seconds(0));
  std::map<std::string, LogRecord> last;  // handle -> most significant record
  for (auto& r : log_.readAll()) {
    auto it = last.find(r.handle);
    if (it == last.end() || !isTerminal(it->second.kind)) last[r.handle] = r;
  }
  std::vector<StagedJob> staged;
  for (const auto& de : fs::directory_iterator(spool_.executorJobs())) {
    if (de.path().extension() != ".json") continue;
    try {
      staged.push_back(jobFromJson(nlohmann::json::parse(util::readFile(de.path()))));
    } catch (const std::exception& e) {
      spdlog::warn("executor: ignoring unreadable job file {}: {}", de.path().string(), e.what());
    }
  }
  std::sort(staged.begin(), staged.end(),
            [](const StagedJob& a, const StagedJob& b) { return std::tie(a.stagedAt, a.handle) < std::tie(b.stagedAt, b.handle); });

  std::lock_guard lock(mu_);
  jobs_.clear();
  runQueue_.clear();
  for (auto& j : staged) {
    Entry e;
    e.job = j;
    auto it = last.find(j.handle);
    if (it == last.end()) {
      auto r = record(j, LogKind::Staged);
      log_.append(r);
      e.last = LogKind::Staged;
    } else {
      e.last = it->second.kind;
    }
    if (j.committed && e.last == LogKind::Staged) {
      auto r = record(j, LogKind::Committed);
      log_.append(r);
      e.last = LogKind::Committed;
    }
    if (e.last == LogKind::Executing) {
      auto pid = it->second.data.find("pid");
      if (pid != it->second.data.end()) {
        pid_t p = static_cast<pid_t>(std::stol(pid->second));
        if (p > 1) ::kill(-p, SIGKILL);
      }
      auto r = record(j, LogKind::Aborted, {{"reason", "executor restarted"}});
      log_.append(r);
      e.last = LogKind::Aborted;
    }
    if (e.last == LogKind::Committed) runQueue_.push_back(j.handle);
    jobs_[j.handle] = std::move(e);
  }
  spdlog::info("executor: recovered {} job(s), {} runnable", jobs_.size(), runQueue_.size());
}

std::string Executor::stage(const wm::SubmissionDescriptor& d, const std::string& idemKey) {
  if (idemKey.empty() || d.jobId.empty() || d.ceId.empty() || d.executable.empty() || d.attempt < 1)
    throw Error(Errc::BadRequest, "invalid submission descriptor");
  std::string handle = handleFor(idemKey);
  if (handle.find_first_of(" \t\n") != std::string::npos || handle.front() == '.')
    throw Error(Errc::BadRequest, "invalid idempotency key '" + idemKey + "'");
  std::lock_guard lock(mu_);
  if (jobs_.count(handle)) return handle;
  Entry e;
  e.job = StagedJob{handle, d, false, util::nowMs()};
  persist(e.job);
  auto r = record(e.job, LogKind::Staged);
  log_.append(r);
  jobs_[handle] = std::move(e);
  return handle;
}

void Executor::commit(const std::string& handle) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(handle);
  if (it == jobs_.end()) throw Error(Errc::UnknownHandle, "unknown handle '" + handle + "'");
  Entry& e = it->second;
  if (e.last != LogKind::Staged) return;
  e.job.committed = true;
  persist(e.job);
  auto r = record(e.job, LogKind::Committed);
  log_.append(r);
  e.last = LogKind::Committed;
  runQueue_.push_back(handle);
}

void Executor::cancel(const std::string& handle) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(handle);
  if (it == jobs_.end()) throw Error(Errc::UnknownHandle, "unknown handle '" + handle + "'");
  Entry& e = it->second;
  if (isTerminal(e.last) || e.cancelRequested) throw Error(Errc::AlreadyTerminal, handle + " already terminal");
  if (e.running) {
    e.cancelRequested = true;
    if (e.pgid > 0) ::kill(-e.pgid, SIGKILL);
    return;
  }
  auto r = record(e.job, LogKind::Cancelled);
  log_.append(r);
  e.last = LogKind::Cancelled;
  runQueue_.erase(std::remove(runQueue_.begin(), runQueue_.end(), handle), runQueue_.end());
}

bool Executor::processOne() {
  auto item = queue_.claim("executor");
  if (!item) return false;
  try {
    auto j = nlohmann::json::parse(item->payload);
    std::string op = j.at("op").get<std::string>();
    if (op == "submit") {
      auto d = wm::descriptorFromJson(j.at("descriptor"));
      std::string handle = stage(d, d.idemKey());
      util::crashPoint("executor.after-stage");
      commit(handle);
      util::crashPoint("executor.after-commit");
    } else if (op == "cancel") {
      std::string key = j.at("jobId").get<std::string>() + "/" + std::to_string(j.at("attempt").get<int>());
      try {
        cancel(handleFor(key));
      } catch (const Error& e) {
        spdlog::info("executor: cancel {}: {}", key, e.what());
      }
    } else {
      throw Error(Errc::BadRequest, "unknown op '" + op + "'");
    }
    queue_.settle(item->seq, fsq::Disposition::Ack);
  } catch (const Error& e) {
    if (e.code() == Errc::StorageError && item->attempts < 3) {
      queue_.settle(item->seq, fsq::Disposition::Nack);
    } else {
      spdlog::error("executor: dropping request {}: {}", item->seq, e.what());
      queue_.settle(item->seq, fsq::Disposition::Ack);
    }
  } catch (const std::exception& e) {
    spdlog::error("executor: dropping malformed request {}: {}", item->seq, e.what());
    queue_.settle(item->seq, fsq::Disposition::Ack);
  }
  return true;
}

void Executor::schedule() {
  std::lock_guard lock(mu_);
  if (stopping_) return;
  for (auto it = runQueue_.begin(); it != runQueue_.end();) {
    Entry& e = jobs_.at(*it);
    const std::string& ce = e.job.descriptor.ceId;
    auto slots = slots_.find(ce);
    if (slots == slots_.end()) {
      auto r = record(e.job, LogKind::Aborted, {{"reason", "unknown CE " + ce}});
      log_.append(r);
      e.last = LogKind::Aborted;
      it = runQueue_.erase(it);
      continue;
    }
    if (running_[ce] >= slots->second) {
      ++it;
      continue;
    }
    ++running_[ce];
    slotsChanged_ = true;
    e.running = true;
    ++activeWrappers_;
    std::thread(&Executor::wrapper, this, *it).detach();
    it = runQueue_.erase(it);
  }
}

std::size_t Executor::gc() {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  const auto now = util::nowMs();
  for (auto& [h, e] : jobs_) {
    if (e.last != LogKind::Staged || now - e.job.stagedAt < cfg_.commitTimeout.count()) continue;
    auto r = record(e.job, LogKind::Aborted, {{"reason", "commit timeout"}});
    log_.append(r);
    e.last = LogKind::Aborted;
    ++n;
  }
  return n;
}

void Executor::heartbeat() {
  broker::Registry reg(spool_.registry());
  std::map<std::string, std::size_t> running;
  {
    std::lock_guard lock(mu_);
    running = running_;
    slotsChanged_ = false;
  }
  for (const auto& r : reg.all()) {
    classad::ClassAd ad = r.ad;
    if (r.isCE) {
      auto s = slots_.find(r.id);
      if (s == slots_.end()) continue;
      ad.set("FreeCPUs", classad::Value(static_cast<std::int64_t>(s->second - std::min(s->second, running[r.id]))));
    }
    try {
      reg.upsert(std::move(ad));
    } catch (const Error& e) {
      spdlog::warn("executor: heartbeat for {} failed: {}", r.id, e.what());
    }
  }
  lastHeartbeat_ = std::chrono::steady_clock::now();
}

void Executor::finish(const std::string& handle, LogKind kind, std::map<std::string, std::string> data) {
  std::lock_guard lock(mu_);
  Entry& e = jobs_.at(handle);
  if (!stopping_) {
    auto r = record(e.job, kind, std::move(data));
    log_.append(r);
    e.last = kind;
  }
  e.running = false;
  e.pgid = 0;
  --running_[e.job.descriptor.ceId];
  slotsChanged_ = true;
  --activeWrappers_;
  cv_.notify_all();
}

void Executor::wrapper(std::string handle) {
  wm::SubmissionDescriptor d;
  {
    std::lock_guard lock(mu_);
    d = jobs_.at(handle).job.descriptor;
  }
  auto abort = [&](const std::string& reason) {
    spdlog::warn("executor: {} aborted: {}", handle, reason);
    finish(handle, LogKind::Aborted, {{"reason", reason}});
  };

  const fs::path scratch = spool_.scratch(handle);
  std::error_code ec;
  fs::remove_all(scratch, ec);
  fs::create_directories(scratch, ec);
  if (ec) return abort("cannot create scratch directory: " + ec.message());
  try {
    for (const auto& name : d.inputSandbox) {
      fs::path dst = scratch / name;
      fs::create_directories(dst.parent_path());
      fs::copy_file(fs::path(d.sandboxDir) / name, dst, fs::copy_options::overwrite_existing);
    }
  } catch (const std::exception& e) {
    return abort(std::string("sandbox copy failed: ") + e.what());
  }

  std::string pathVar = cfg_.binDir.empty() ? "" : cfg_.binDir.string() + ":";
  if (const char* p = std::getenv("PATH")) pathVar += p;
  else pathVar += "/usr/local/bin:/usr/bin:/bin";

  std::string cmd;
  const bool inSandbox = std::find(d.inputSandbox.begin(), d.inputSandbox.end(), d.executable) != d.inputSandbox.end();
  if (inSandbox) {
    fs::permissions(scratch / d.executable, fs::perms::owner_exec | fs::perms::group_exec, fs::perm_options::add, ec);
    cmd = "./" + shellQuote(d.executable);
  } else if (d.executable.find('/') != std::string::npos) {
    if (::access(d.executable.c_str(), X_OK) != 0) return abort("missing executable " + d.executable);
    cmd = shellQuote(d.executable);
  } else {
    if (!searchPath(d.executable, pathVar)) return abort("missing executable " + d.executable);
    cmd = shellQuote(d.executable);
  }
  if (!d.arguments.empty()) cmd += " " + d.arguments;
  cmd = "exec " + cmd;

  fs::path stdinPath = "/dev/null";
  if (d.stdInput) {
    stdinPath = scratch / *d.stdInput;
    if (!fs::exists(stdinPath)) return abort("missing standard input file " + *d.stdInput);
  }
  const fs::path stdoutPath = scratch / d.stdOutput.value_or(".stdout");
  const fs::path stderrPath = scratch / d.stdError.value_or(".stderr");

  std::vector<std::string> envStore;
  std::map<std::string, std::string> env;
  for (char** e = environ; *e; ++e) {
    std::string kv(*e);
    auto eq = kv.find('=');
    if (eq != std::string::npos) env[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  for (const auto& [k, v] : d.env) env[k] = v;
  env["PATH"] = pathVar;
  env["WMS_SCRATCH"] = scratch.string();
  if (fs::exists(spool_.gatewayAddress())) {
    std::string addr = util::readFile(spool_.gatewayAddress());
    while (!addr.empty() && (addr.back() == '\n' || addr.back() == ' ')) addr.pop_back();
    env["WMS_GATEWAY"] = addr;
  }
  for (const auto& [k, v] : env) envStore.push_back(k + "=" + v);
  std::vector<char*> envp;
  for (auto& s : envStore) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::string sh = "/bin/sh", dashC = "-c";
  char* argv[] = {sh.data(), dashC.data(), cmd.data(), nullptr};

  const bool interactive = d.listener.has_value();
  int inPipe[2] = {-1, -1}, outPipe[2] = {-1, -1}, errPipe[2] = {-1, -1}, goPipe[2];
  if (::pipe2(goPipe, O_CLOEXEC) != 0) return abort("pipe failed");
  if (interactive) {
    if (::pipe2(inPipe, O_CLOEXEC) != 0 || ::pipe2(outPipe, O_CLOEXEC) != 0 || ::pipe2(errPipe, O_CLOEXEC) != 0)
      return abort("pipe failed");
  }
  const std::string scratchStr = scratch.string(), inStr = stdinPath.string(), outStr = stdoutPath.string(),
                    errStr = stderrPath.string();
  const pid_t parent = ::getpid();

  pid_t pid = ::fork();
  if (pid < 0) return abort(std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    ::prctl(PR_SET_PDEATHSIG, SIGKILL);
    if (::getppid() != parent) ::_exit(127);
    char go = 0;
    if (::read(goPipe[0], &go, 1) != 1) ::_exit(127);
    if (::chdir(scratchStr.c_str()) != 0) ::_exit(127);
    int in, out, err;
    if (interactive) {
      in = inPipe[0];
      out = outPipe[1];
      err = errPipe[1];
    } else {
      in = ::open(inStr.c_str(), O_RDONLY);
      out = ::open(outStr.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      err = ::open(errStr.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      if (in < 0 || out < 0 || err < 0) ::_exit(127);
    }
    ::dup2(in, 0);
    ::dup2(out, 1);
    ::dup2(err, 2);
    ::close_range(3, ~0U, 0);
    ::execve(argv[0], argv, envp.data());
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  ::close(goPipe[0]);
  if (interactive) {
    ::close(inPipe[0]);
    ::close(outPipe[1]);
    ::close(errPipe[1]);
  }
  const auto started = std::chrono::steady_clock::now();
  {
    std::lock_guard lock(mu_);
    Entry& e = jobs_.at(handle);
    e.pgid = pid;
    auto r = record(e.job, LogKind::Executing, {{"pid", std::to_string(pid)}});
    log_.append(r);
    e.last = LogKind::Executing;
    if (e.cancelRequested || stopping_) ::kill(-pid, SIGKILL);
  }
  util::crashPoint("executor.after-executing");
  char go = 1;
  if (::write(goPipe[1], &go, 1) != 1) spdlog::warn("executor: {} did not receive the start signal", handle);
  ::close(goPipe[1]);

  std::vector<std::thread> bridge;
  net::Socket sock;
  std::mutex sendMu;
  bool connected = false;
  if (interactive) {
    // Keep stdin open for the job until the UI says otherwise.
    const auto deadline = std::chrono::steady_clock::now() + cfg_.interactiveConnectTimeout;
    while (!connected && std::chrono::steady_clock::now() < deadline) {
      try {
        sock = net::connectTcp(d.listener->host, d.listener->port, std::chrono::seconds(2));
        connected = true;
      } catch (const Error&) {
        int st = 0;
        if (::waitpid(pid, &st, WNOHANG | WNOWAIT) == pid) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
      }
    }
    if (!connected) spdlog::warn("executor: {} could not reach its interactive listener", handle);
    int stdinFd = inPipe[1];
    if (connected) {
      int sfd = sock.fd();
      bridge.emplace_back([sfd, stdinFd] {
        net::FrameDecoder dec;
        char buf[8192];
        bool open = true;
        for (;;) {
          ssize_t n = ::recv(sfd, buf, sizeof buf, 0);
          if (n < 0 && errno == EINTR) continue;
          if (n <= 0) break;
          dec.feed(std::string_view(buf, static_cast<std::size_t>(n)));
          try {
            while (auto f = dec.next()) {
              if (f->stream != net::kStdin || !open) continue;
              if (f->data.empty() || !net::writeAll(stdinFd, f->data)) {
                ::close(stdinFd);
                open = false;
              }
            }
          } catch (const Error&) {
            break;
          }
        }
        if (open) ::close(stdinFd);
      });
    } else {
      ::close(stdinFd);
    }
    int sfd = sock.valid() ? sock.fd() : -1;
    bridge.emplace_back([&, fd = outPipe[0], sfd] { pumpToSocket(fd, net::kStdout, sfd, sendMu, connected); });
    bridge.emplace_back([&, fd = errPipe[0], sfd] { pumpToSocket(fd, net::kStderr, sfd, sendMu, connected); });
  }

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  ::kill(-pid, SIGKILL);  // stray children of the job
  if (interactive) {
    // Output pumps end at EOF; then unblock the stdin reader.
    for (std::size_t i = bridge.size() >= 2 ? bridge.size() - 2 : 0; i < bridge.size(); ++i) bridge[i].join();
    if (sock.valid()) ::shutdown(sock.fd(), SHUT_RDWR);
    if (bridge.size() == 3) bridge[0].join();
  }
  util::crashPoint("executor.after-exit");

  std::map<std::string, std::string> data;
  std::string missing;
  for (const auto& name : d.outputSandbox) {
    fs::path src = scratch / name;
    try {
      if (fs::exists(src)) copyAtomic(src, fs::path(d.outputDir) / name);
      else missing += (missing.empty() ? "" : ",") + name;
    } catch (const std::exception& e) {
      missing += (missing.empty() ? "" : ",") + name;
      spdlog::warn("executor: {}: output {} not retrieved: {}", handle, name, e.what());
    }
  }
  if (!missing.empty()) data["missingOutput"] = missing;

  bool cancelled;
  {
    std::lock_guard lock(mu_);
    cancelled = jobs_.at(handle).cancelRequested;
  }
  if (cancelled) return finish(handle, LogKind::Cancelled, {});
  if (WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL) {
    return finish(handle, LogKind::Aborted, {{"reason", "killed by signal 9"}});
  }
  int exitCode = WIFSIGNALED(status) ? 128 + WTERMSIG(status) : WEXITSTATUS(status);
  data["exitCode"] = std::to_string(exitCode);
  data["wallSeconds"] = std::to_string(wall);
  data["cpuSeconds"] = std::to_string(cfg_.fakeCpuSeconds.value_or(wall));
  finish(handle, LogKind::Terminated, std::move(data));
}

std::optional<LogKind> Executor::lastRecord(const std::string& handle) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(handle);
  if (it == jobs_.end()) return std::nullopt;
  return it->second.last;
}

std::size_t Executor::runningOn(const std::string& ceId) const {
  std::lock_guard lock(mu_);
  auto it = running_.find(ceId);
  return it == running_.end() ? 0 : it->second;
}

std::size_t Executor::slotsOf(const std::string& ceId) const {
  auto it = slots_.find(ceId);
  return it == slots_.end() ? 0 : it->second;
}

bool Executor::idle() const {
  std::lock_guard lock(mu_);
  return runQueue_.empty() && activeWrappers_ == 0;
}

bool Executor::waitIdle(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    while (processOne()) {
    }
    schedule();
    if (idle() && queue_.size() == 0) return true;
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, std::chrono::milliseconds(20));
  }
  return false;
}

void Executor::run(const std::atomic<bool>& stop) {
  recover();
  heartbeat();
  while (!stop.load()) {
    bool worked = false;
    try {
      worked = processOne();
      schedule();
      auto now = std::chrono::steady_clock::now();
      if (now - lastGc_ > std::chrono::seconds(1)) {
        gc();
        lastGc_ = now;
      }
      bool changed;
      {
        std::lock_guard lock(mu_);
        changed = slotsChanged_;
      }
      if (changed || now - lastHeartbeat_ >= cfg_.heartbeatInterval) heartbeat();
    } catch (const std::exception& e) {
      spdlog::error("executor: {}", e.what());
    }
    if (!worked) {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, cfg_.pollInterval);
    }
  }
}

}  // namespace wms::executor
