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

// Process-level helpers for the end-to-end acceptance runs: daemons are real
// wmsd processes sharing one spool directory.

#include <fcntl.h>
#include <signal.h>
#include <sys/prctl.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "wms/cli/cli.hpp"
#include "wms/executor/job_log.hpp"
#include "wms/lb/store.hpp"
#include "wms/spool.hpp"
#include "wms/util/fs.hpp"

extern char** environ;

namespace wms::acceptance {

namespace fs = std::filesystem;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

inline fs::path binDir() { return WMS_BIN_DIR; }
inline fs::path fixtureDir() { return WMS_FIXTURE_DIR; }
inline fs::path jobsDir() { return WMS_JOBS_DIR; }

inline bool waitUntil(const std::function<bool()>& pred, std::chrono::milliseconds timeout,
                      std::chrono::milliseconds every = 50ms) {
  auto deadline = Clock::now() + timeout;
  while (Clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(every);
  }
  return pred();
}

/// One wmsd process. Output goes to `log`; the child dies with the harness.
class Daemon {
 public:
  Daemon(std::vector<std::string> args, fs::path log) : args_(std::move(args)), log_(std::move(log)) {}
  Daemon(const Daemon&) = delete;
  Daemon& operator=(const Daemon&) = delete;
  ~Daemon() { stop(); }

  void start(const std::string& crashAt = {}) {
    std::vector<std::string> env;
    for (char** e = environ; *e; ++e)
      if (std::string_view(*e).rfind("WMS_CRASH_AT=", 0) != 0) env.emplace_back(*e);
    if (!crashAt.empty()) env.push_back("WMS_CRASH_AT=" + crashAt);
    std::vector<std::string> argv{(binDir() / "wmsd").string()};
    argv.insert(argv.end(), args_.begin(), args_.end());

    std::vector<char*> cargv, cenv;
    for (auto& a : argv) cargv.push_back(a.data());
    cargv.push_back(nullptr);
    for (auto& e : env) cenv.push_back(e.data());
    cenv.push_back(nullptr);

    int fd = ::open(log_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    pid_t parent = ::getpid();
    pid_ = ::fork();
    if (pid_ == 0) {
      ::prctl(PR_SET_PDEATHSIG, SIGKILL);
      if (::getppid() != parent) ::_exit(127);
      if (fd >= 0) {
        ::dup2(fd, 1);
        ::dup2(fd, 2);
      }
      ::execve(cargv[0], cargv.data(), cenv.data());
      ::_exit(127);
    }
    if (fd >= 0) ::close(fd);
  }

  /// The wait status once the process has exited.
  std::optional<int> poll() {
    if (pid_ <= 0) return std::nullopt;
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      return status;
    }
    return std::nullopt;
  }

  bool running() const { return pid_ > 0; }

  void stop() {
    if (pid_ <= 0) return;
    ::kill(pid_, SIGTERM);
    if (!waitUntil([&] { return poll().has_value() || pid_ <= 0; }, 10s, 20ms)) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

 private:
  std::vector<std::string> args_;
  fs::path log_;
  pid_t pid_ = -1;
};

struct CliResult {
  int rc = 0;
  std::string out, err;
};

inline CliResult wmsCli(const std::string& gateway, std::vector<std::string> args, int inFd = 0) {
  args.insert(args.begin(), {"--gateway", gateway, "--user", "alice"});
  std::ostringstream out, err;
  int rc = cli::run(args, out, err, inFd);
  return {rc, out.str(), err.str()};
}

inline std::string firstLine(const std::string& s) { return s.substr(0, s.find('\n')); }

/// Reads the executor's job log without touching it.
inline std::vector<executor::LogRecord> readJobLog(const Spool& spool) {
  std::vector<executor::LogRecord> out;
  std::string text;
  try {
    text = util::readFile(spool.jobLog());
  } catch (const std::exception&) {
    return out;
  }
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (in.eof()) break;  // incomplete tail
    try {
      out.push_back(executor::recordFromLine(line));
    } catch (const std::exception&) {
    }
  }
  return out;
}

inline std::optional<lb::JobRecord> findJob(const Spool& spool, const std::string& jobId) {
  try {
    return lb::Store(spool.lbStore()).find(jobId);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

inline bool jobTerminal(const Spool& spool, const std::string& jobId) {
  auto r = findJob(spool, jobId);
  return r && lb::isTerminal(r->state);
}

}  // namespace wms::acceptance
