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

#include "wms/executor/log_monitor.hpp"

#include <fstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "wms/accounting/ledger.hpp"
#include "wms/broker/registry.hpp"
#include "wms/error.hpp"
#include "wms/util/crash.hpp"
#include "wms/util/fs.hpp"

namespace wms::executor {

std::optional<lb::Event> translate(const LogRecord& r, std::uint64_t offset) {
  lb::Event e;
  e.jobId = r.jobId;
  e.source = lb::Source::LogMonitor;
  e.sourceSeq = static_cast<std::int64_t>(offset) + 1;
  e.timestamp = r.ts;
  e.payload["attempt"] = std::to_string(r.attempt());
  auto get = [&](const char* k) {
    auto it = r.data.find(k);
    return it == r.data.end() ? std::string() : it->second;
  };
  switch (r.kind) {
    case LogKind::Staged:
      return std::nullopt;
    case LogKind::Committed:
      e.kind = lb::Kind::Committed;
      break;
    case LogKind::Executing:
      e.kind = lb::Kind::Running;
      e.payload["destination"] = get("ceId");
      break;
    case LogKind::Terminated:
      e.kind = lb::Kind::Done;
      e.payload["exitCode"] = get("exitCode");
      e.payload["destination"] = get("ceId");
      if (!get("cpuSeconds").empty()) e.payload["cpuSeconds"] = get("cpuSeconds");
      break;
    case LogKind::Aborted:
      e.kind = lb::Kind::Aborted;
      e.payload["reason"] = get("reason");
      break;
    case LogKind::Cancelled:
      e.kind = lb::Kind::Cancelled;
      break;
  }
  return e;
}

namespace {

std::uint64_t readOffset(const fs::path& p) {
  std::ifstream in(p);
  std::uint64_t off = 0;
  if (in >> off) return off;
  return 0;
}

}  // namespace

std::size_t tailAndTranslate(const fs::path& logPath, const fs::path& offsetPath, lb::Store& store,
                             const TerminatedHook& onTerminated) {
  std::uint64_t offset = readOffset(offsetPath);
  std::ifstream in(logPath, std::ios::binary);
  if (!in) return 0;
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  if (size <= offset) return 0;
  in.seekg(static_cast<std::streamoff>(offset));
  std::string chunk(size - offset, '\0');
  in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));

  std::size_t forwarded = 0;
  std::size_t pos = 0;
  for (;;) {
    auto nl = chunk.find('\n', pos);
    if (nl == std::string::npos) break;  // torn tail: wait for the rest
    std::string_view line(chunk.data() + pos, nl - pos);
    const std::uint64_t lineOffset = offset + pos;
    pos = nl + 1;
    if (line.empty()) continue;
    LogRecord r;
    try {
      r = recordFromLine(line);
    } catch (const Error& e) {
      spdlog::warn("logmonitor: skipping record at offset {}: {}", lineOffset, e.what());
      continue;
    }
    auto ev = translate(r, lineOffset);
    if (!ev) continue;
    try {
      store.logEvent(*ev);
      ++forwarded;
    } catch (const Error& e) {
      spdlog::warn("logmonitor: {} for {} not forwarded: {}", toString(r.kind), r.jobId, e.what());
      continue;
    }
    if (r.kind == LogKind::Terminated && onTerminated) {
      try {
        onTerminated(r);
      } catch (const std::exception& e) {
        spdlog::warn("logmonitor: accounting for {} failed: {}", r.jobId, e.what());
      }
    }
  }
  if (pos == 0) return forwarded;
  util::crashPoint("logmonitor.after-forward");
  util::writeFileAtomic(offsetPath, std::to_string(offset + pos));
  return forwarded;
}

void Charger::operator()(const LogRecord& r, const lb::Store& store) const {
  if (!fs::exists(spool_.accounts())) return;
  auto rec = store.find(r.jobId);
  if (!rec) return;
  auto ceIt = r.data.find("ceId");
  if (ceIt == r.data.end()) return;
  broker::Registry reg(spool_.registry());
  auto ce = reg.get(ceIt->second);
  if (!ce) {
    spdlog::warn("logmonitor: no registry entry for {}; {} not charged", ceIt->second, r.jobId);
    return;
  }
  auto group = ce->ad.getString("OwnerGroup");
  auto price = ce->ad.getInteger("PricePerCpuSecond");
  if (!group || !price) return;
  double cpu = 0;
  if (auto it = r.data.find("cpuSeconds"); it != r.data.end()) cpu = std::stod(it->second);
  accounting::Ledger ledger(spool_.accounts(), spool_.ledger());
  ledger.chargeJob(r.jobId, r.attempt(), rec->owner, *group, *price, cpu);
}

void runLogMonitor(const LogMonitorConfig& cfg, const std::atomic<bool>& stop) {
  Spool spool(cfg.spool);
  lb::Store store(spool.lbStore());
  Charger charge(spool);
  auto hook = [&](const LogRecord& r) { charge(r, store); };
  while (!stop.load()) {
    try {
      tailAndTranslate(spool.jobLog(), spool.jobLogOffset(), store, hook);
    } catch (const std::exception& e) {
      spdlog::error("logmonitor: {}", e.what());
    }
    std::this_thread::sleep_for(cfg.pollInterval);
  }
}

}  // namespace wms::executor
