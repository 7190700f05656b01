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

// wmsd: runs one or all of the daemons (gateway, wm, executor, logmonitor)
// over a shared spool directory.

#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "wms/broker/registry.hpp"
#include "wms/error.hpp"
#include "wms/executor/executor.hpp"
#include "wms/executor/log_monitor.hpp"
#include "wms/gateway/gateway.hpp"
#include "wms/spool.hpp"
#include "wms/wm/manager.hpp"

namespace fs = std::filesystem;

namespace {

std::atomic<bool> gStop{false};

void onSignal(int) { gStop = true; }

std::string envOr(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Workload management daemons", "wmsd"};
  std::string role;
  std::string spool = envOr("WMS_SPOOL", "./spool");
  std::string resources, accounts, host = "127.0.0.1", binDir, strategy = "best", level = "info";
  int port = std::atoi(envOr("WMS_GATEWAY_PORT", std::to_string(wms::gateway::kDefaultPort)).c_str());
  std::optional<std::uint64_t> seed;
  std::optional<double> fakeCpu;
  std::int64_t ttlMs = wms::broker::Registry::kDefaultTtlMs;
  std::int64_t graceMs = 2000, commitTimeoutMs = 30000, noMatchBackoffMs = 1000;
  int noMatchRetries = 2;

  app.add_option("role", role, "gateway | wm | executor | logmonitor | all")
      ->required()
      ->check(CLI::IsMember({"gateway", "wm", "executor", "logmonitor", "all"}));
  app.add_option("--spool", spool, "Spool root (default $WMS_SPOOL)");
  app.add_option("--resources", resources, "Directory of resource .ad fixtures loaded into the registry");
  app.add_option("--accounts", accounts, "Initial account funding (copied into the spool once)");
  app.add_option("--host", host, "Gateway bind address");
  app.add_option("--port", port, "Gateway port (default $WMS_GATEWAY_PORT or 7846; 0 picks one)");
  app.add_option("--bin-dir", binDir, "Directory put first on job PATH (default: next to wmsd)");
  app.add_option("--strategy", strategy, "Broker strategy");
  app.add_option("--seed", seed, "Seed for randomized strategies");
  app.add_option("--fake-cpu-seconds", fakeCpu, "Report this CPU time for every job");
  app.add_option("--registry-ttl-ms", ttlMs);
  app.add_option("--reconcile-grace-ms", graceMs);
  app.add_option("--commit-timeout-ms", commitTimeoutMs);
  app.add_option("--no-match-retries", noMatchRetries);
  app.add_option("--no-match-backoff-ms", noMatchBackoffMs);
  app.add_option("--log-level", level);
  CLI11_PARSE(app, argc, argv);

  spdlog::set_level(spdlog::level::from_str(level));
  spdlog::set_pattern("[%H:%M:%S.%e] [" + role + ":" + std::to_string(::getpid()) + "] [%l] %v");
  std::signal(SIGTERM, onSignal);
  std::signal(SIGINT, onSignal);
  std::signal(SIGPIPE, SIG_IGN);

  try {
    fs::create_directories(spool);
    const wms::Spool sp{fs::absolute(spool)};
    if (binDir.empty()) binDir = fs::read_symlink("/proc/self/exe").parent_path().string();
    if (!resources.empty() && (role == "executor" || role == "all")) {
      wms::broker::Registry reg(sp.registry());
      spdlog::info("loaded {} resource ad(s)", reg.loadFixtures(resources));
    }
    if (!accounts.empty() && !fs::exists(sp.accounts())) {
      fs::create_directories(sp.accounts().parent_path());
      fs::copy_file(accounts, sp.accounts());
    }

    auto runGateway = [&] {
      wms::gateway::Gateway gw({sp.root, host, port});
      gw.serve(gStop);
    };
    auto runWm = [&] {
      wms::wm::Config cfg;
      cfg.spool = sp.root;
      cfg.strategy = strategy;
      cfg.seed = seed;
      cfg.registryTtlMs = ttlMs;
      cfg.reconcileGrace = std::chrono::milliseconds(graceMs);
      cfg.noMatchRetries = noMatchRetries;
      cfg.noMatchBackoff = std::chrono::milliseconds(noMatchBackoffMs);
      wms::wm::WorkloadManager wm(cfg);
      wm.run(gStop);
    };
    auto runExecutor = [&] {
      wms::executor::Config cfg;
      cfg.spool = sp.root;
      cfg.binDir = binDir;
      cfg.fakeCpuSeconds = fakeCpu;
      cfg.commitTimeout = std::chrono::milliseconds(commitTimeoutMs);
      wms::executor::Executor ex(cfg);
      ex.run(gStop);
    };
    auto runLogMonitor = [&] { wms::executor::runLogMonitor({sp.root}, gStop); };

    if (role == "gateway") runGateway();
    else if (role == "wm") runWm();
    else if (role == "executor") runExecutor();
    else if (role == "logmonitor") runLogMonitor();
    else {
      std::thread t1(runExecutor), t2(runLogMonitor), t3(runWm);
      runGateway();
      t1.join();
      t2.join();
      t3.join();
    }
  } catch (const std::exception& e) {
    spdlog::critical("{}", e.what());
    return 1;
  }
  return 0;
}
