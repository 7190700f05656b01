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

#include "wms/wm/manager.hpp"

#include <unistd.h>

#include <thread>

#include <spdlog/spdlog.h>

#include "wms/error.hpp"
#include "wms/util/crash.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"
#include "wms/wm/adapter.hpp"
#include "wms/wm/dag_run.hpp"
#include "wms/wm/partition.hpp"

namespace wms::wm {

namespace {

const lb::Event* findEvent(const lb::JobRecord& r, lb::Kind kind, int attempt) {
  for (const auto& e : r.events)
    if (e.kind == kind && e.attempt() == attempt) return &e;
  return nullptr;
}

bool hasKind(const lb::JobRecord& r, lb::Kind kind) {
  for (const auto& e : r.events)
    if (e.kind == kind) return true;
  return false;
}

std::string registeredField(const lb::JobRecord& r, const std::string& key) {
  for (const auto& e : r.events) {
    if (e.kind != lb::Kind::Registered) continue;
    auto it = e.payload.find(key);
    return it == e.payload.end() ? std::string() : it->second;
  }
  return {};
}

std::int64_t lastEventTs(const lb::JobRecord& r) {
  std::int64_t ts = 0;
  for (const auto& e : r.events) ts = std::max(ts, e.timestamp);
  return ts;
}

int retryCountOf(const std::string& jdlText) {
  auto v = jdl::validateJobText(jdlText);
  return v.ok() ? v.value->retryCount : 0;
}

std::set<std::string> previousDestination(const lb::JobRecord& r, int attempt) {
  if (attempt < 1) return {};
  if (const lb::Event* m = findEvent(r, lb::Kind::Matched, attempt)) {
    auto it = m->payload.find("destination");
    if (it != m->payload.end()) return {it->second};
  }
  return {};
}

std::string abortReason(const lb::JobRecord& r, int attempt) {
  for (const auto& e : r.events) {
    if (e.kind == lb::Kind::Aborted && e.attempt() == attempt) {
      auto it = e.payload.find("reason");
      if (it != e.payload.end()) return it->second;
    }
  }
  return {};
}

}  // namespace

WorkloadManager::WorkloadManager(Config config)
    : cfg_(std::move(config)),
      spool_(cfg_.spool),
      store_(spool_.lbStore()),
      requests_(spool_.wmRequests()),
      executorQueue_(spool_.executorSubmit()),
      registry_(spool_.registry()),
      owner_("wm") {
  registry_.setTtlMs(cfg_.registryTtlMs);
}

void WorkloadManager::recover() {
  std::size_t n = requests_.recoverScan(std::chrono::seconds(0));
  if (n > 0) spdlog::info("wm: recovered {} in-flight request(s)", n);
}

void WorkloadManager::log(const std::string& jobId, lb::Kind kind, std::int64_t sseq, lb::Payload payload) {
  lb::Event e;
  e.jobId = jobId;
  e.source = lb::Source::WM;
  e.sourceSeq = sseq;
  e.timestamp = util::nowMs();
  e.kind = kind;
  e.payload = std::move(payload);
  store_.logEvent(std::move(e));
}

void WorkloadManager::enqueueRequest(const Request& r) { requests_.enqueue(toJson(r).dump()); }

bool WorkloadManager::processOne() {
  auto item = requests_.claim(owner_);
  if (!item) return false;
  util::crashPoint("wm.after-claim");
  try {
    Request r = requestFromJson(nlohmann::json::parse(item->payload));
    handle(r);
    util::crashPoint("wm.before-ack");
    requests_.settle(item->seq, fsq::Disposition::Ack);
  } catch (const std::exception& e) {
    if (item->attempts < cfg_.maxAttempts) {
      spdlog::warn("wm: request {} failed (attempt {}): {}", item->seq, item->attempts, e.what());
      requests_.settle(item->seq, fsq::Disposition::Nack);
      return true;
    }
    spdlog::error("wm: dead-lettering request {}: {}", item->seq, e.what());
    fs::path dead = spool_.root / "dead-letter";
    fs::create_directories(dead);
    util::writeFileAtomic(dead / (fsq::seqName(item->seq) + ".json"), item->payload);
    auto j = nlohmann::json::parse(item->payload, nullptr, false);
    if (j.is_object() && j.contains("jobId") && j["jobId"].is_string()) {
      std::string jobId = j["jobId"].get<std::string>();
      if (auto rec = store_.find(jobId)) {
        log(jobId, lb::Kind::Refused, wmSeq(rec->attempt, WmStage::Refused),
            {{"attempt", std::to_string(rec->attempt)}, {"reason", e.what()}});
      }
    }
    requests_.settle(item->seq, fsq::Disposition::Ack);
  }
  return true;
}

void WorkloadManager::handle(const Request& r) {
  switch (r.kind) {
    case RequestKind::Submit:
    case RequestKind::SubmitDag:
    case RequestKind::ResubmitFromState: {
      auto rec = store_.find(r.jobId);
      if (!rec) {
        spdlog::warn("wm: dropping {} for unknown job {}", toString(r.kind), r.jobId);
        return;
      }
      submit(r, r.jdl.empty() ? rec->jdl : r.jdl);
      return;
    }
    case RequestKind::Cancel:
      cancel(r);
      return;
  }
}

void WorkloadManager::submit(const Request& r, std::string jdlText) {
  auto rec = store_.find(r.jobId);
  const int a = r.attempt;
  if (!rec || rec->attempt > a) return;  // stale request
  if (rec->attempt == a && lb::isTerminal(rec->state)) return;
  if (rec->attempt < a) {
    lb::Payload p{{"attempt", std::to_string(a)}};
    if (r.fromState) p["fromState"] = std::to_string(*r.fromState);
    log(r.jobId, lb::Kind::Resubmitted, wmSeq(a, WmStage::Resubmitted), p);
    rec = store_.find(r.jobId);
  }
  if (findEvent(*rec, lb::Kind::Staged, a)) return;  // already handed on

  if (dagFor(r.jobId, jdlText)) {
    startDag(*rec, a);
    return;
  }

  auto abort = [&](const std::string& reason) {
    log(r.jobId, lb::Kind::Aborted, wmSeq(a, WmStage::Aborted), {{"attempt", std::to_string(a)}, {"reason", reason}});
  };

  std::string resolved;
  if (const lb::Event* m = findEvent(*rec, lb::Kind::Matched, a); m && m->payload.count("jdl")) {
    resolved = m->payload.at("jdl");
  } else {
    for (int i = 0;; ++i) {
      BrokerHelper bh(registry_.snapshot(), broker::SelectOptions{cfg_.strategy, cfg_.seed, r.jobId, r.exclude});
      try {
        resolved = bh.resolve(jdlText);
        break;
      } catch (const Error& e) {
        if (e.code() == Errc::NoMatchingResources && i < cfg_.noMatchRetries) {
          std::this_thread::sleep_for(cfg_.noMatchBackoff);
          continue;
        }
        abort(e.code() == Errc::NoMatchingResources ? "no matching resources" : e.what());
        return;
      }
    }
    auto v = jdl::validateJobText(resolved);
    lb::Payload p{{"attempt", std::to_string(a)}, {"jdl", resolved}};
    if (v.ok() && v.value->submitTo) p["destination"] = *v.value->submitTo;
    if (v.ok() && v.value->chosenSE) p["se"] = *v.value->chosenSE;
    log(r.jobId, lb::Kind::Matched, wmSeq(a, WmStage::Matched), p);
    util::crashPoint("wm.after-matched");
  }

  std::optional<std::string> checkpointIn;
  try {
    std::optional<lb::StatePairs> pairs;
    if (r.fromState) pairs = store_.getState(r.jobId, *r.fromState);
    else if (a > 1) pairs = store_.getState(r.jobId);
    if (pairs) checkpointIn = writeCheckpointFile(spool_, r.jobId, a, *pairs).string();
  } catch (const Error& e) {
    if (e.code() != Errc::NoSuchState) throw;
    if (r.fromState) {
      abort(e.what());
      return;
    }
  }

  std::string parent = registeredField(*rec, "parent");
  AdaptContext ctx{r.jobId, a, rec->owner, spool_.root, parent.empty() ? r.jobId : parent, checkpointIn};
  SubmissionDescriptor d;
  try {
    AdapterHelper adapter(ctx);
    d = descriptorFromJson(nlohmann::json::parse(adapter.resolve(resolved)));
  } catch (const Error& e) {
    abort(e.what());
    return;
  }
  nlohmann::json item{{"op", "submit"}, {"descriptor", toJson(d)}};
  executorQueue_.enqueue(item.dump());
  util::crashPoint("wm.after-enqueue");
  log(r.jobId, lb::Kind::Staged, wmSeq(a, WmStage::Staged), {{"attempt", std::to_string(a)}, {"destination", d.ceId}});
}

void WorkloadManager::cancel(const Request& r) {
  auto rec = store_.find(r.jobId);
  if (!rec || lb::isTerminal(rec->state)) return;
  const int a = rec->attempt;
  if (auto dag = dagFor(r.jobId, rec->jdl)) {
    log(r.jobId, lb::Kind::Cancelled, wmSeq(a, WmStage::Cancelled), {{"attempt", std::to_string(a)}});
    for (const auto& [name, node] : dag->nodes) {
      Request nr = r;
      nr.jobId = nodeJobId(r.jobId, name);
      cancel(nr);
    }
    return;
  }
  if (!findEvent(*rec, lb::Kind::Staged, a)) {
    log(r.jobId, lb::Kind::Cancelled, wmSeq(a, WmStage::Cancelled),
        {{"attempt", std::to_string(a)}, {"reason", "cancelled before execution"}});
    return;
  }
  nlohmann::json item{{"op", "cancel"}, {"jobId", r.jobId}, {"attempt", a}};
  executorQueue_.enqueue(item.dump());
}

void WorkloadManager::startDag(const lb::JobRecord& rec, int attempt) {
  log(rec.jobId, lb::Kind::Staged, wmSeq(attempt, WmStage::Staged), {{"attempt", std::to_string(attempt)}, {"dag", "1"}});
  if (auto fresh = store_.find(rec.jobId)) dagEngine(*fresh);
}

void WorkloadManager::dagEngine(const lb::JobRecord& rec) {
  const int a = rec.attempt;
  if (!findEvent(rec, lb::Kind::Staged, a)) return;
  auto dag = dagFor(rec.jobId, rec.jdl);
  if (!dag) return;
  auto status = dagNodeStatus(store_, rec.jobId, *dag);

  bool started = false, finished = true, allDone = true;
  for (auto& [name, s] : status) {
    const std::string nodeId = nodeJobId(rec.jobId, name);
    const jdl::JobDescription& node = dag->nodes.at(name);
    if (s == NodeStatus::Ready || (s == NodeStatus::Unreachable && !store_.exists(nodeId))) {
      if (!store_.exists(nodeId)) {
        log(nodeId, lb::Kind::Registered, 1,
            {{"owner", rec.owner}, {"jdl", node.text()}, {"parent", rec.jobId}, {"node", name}});
        int i = 0;
        for (const auto& [k, v] : node.userTags) log(nodeId, lb::Kind::UserTag, 10 + i++, {{"name", k}, {"value", v}});
        util::crashPoint("wm.dag-after-register");
      }
      if (s == NodeStatus::Ready) {
        log(nodeId, lb::Kind::Accepted, 2, {});
        enqueueRequest(Request{RequestKind::Submit, nodeId, rec.owner, node.text(), 1, std::nullopt, {}});
        s = NodeStatus::Submitted;
      } else {
        log(nodeId, lb::Kind::Aborted, wmSeq(1, WmStage::Aborted), {{"attempt", "1"}, {"reason", kUnreachableReason}});
      }
    }
    if (s != NodeStatus::Idle) started = true;
    if (s == NodeStatus::Idle || s == NodeStatus::Ready || s == NodeStatus::Submitted) finished = false;
    if (s != NodeStatus::Done) allDone = false;
  }
  if (started && !findEvent(rec, lb::Kind::Running, a))
    log(rec.jobId, lb::Kind::Running, wmSeq(a, WmStage::DagRunning), {{"attempt", std::to_string(a)}});
  if (!finished) return;
  if (allDone && dag->aggregatorNode && rec.checkpointStates.empty()) {
    auto agg = store_.find(nodeJobId(rec.jobId, *dag->aggregatorNode));
    if (agg && !agg->checkpointStates.empty()) store_.saveState(rec.jobId, agg->checkpointStates.back().pairs);
  }
  log(rec.jobId, lb::Kind::Done, wmSeq(a, WmStage::DagDone),
      {{"attempt", std::to_string(a)}, {"exitCode", allDone ? "0" : "1"}});
}

void WorkloadManager::abortHandler(const lb::JobRecord& rec) {
  const int a = rec.attempt;
  if (hasKind(rec, lb::Kind::Refused)) return;
  if (abortReason(rec, a) == kUnreachableReason) return;
  if (dagFor(rec.jobId, rec.jdl)) return;  // nodes retry individually
  if (a > retryCountOf(rec.jdl)) return;   // budget exhausted: stays ABORTED
  log(rec.jobId, lb::Kind::Resubmitted, wmSeq(a + 1, WmStage::Resubmitted), {{"attempt", std::to_string(a + 1)}});
  util::crashPoint("wm.after-resubmitted");
  enqueueRequest(Request{RequestKind::Submit, rec.jobId, rec.owner, rec.jdl, a + 1, std::nullopt,
                         previousDestination(rec, a)});
}

void WorkloadManager::reconcile(const lb::JobRecord& rec, const std::set<std::string>& queued) {
  if (queued.count(rec.jobId)) return;
  const int a = rec.attempt;
  const auto age = std::chrono::milliseconds(util::nowMs() - lastEventTs(rec));
  if (rec.state == lb::JobState::SUBMITTED) {
    if (registeredField(rec, "pending") == "1") {
      if (age > cfg_.submitTimeout)
        log(rec.jobId, lb::Kind::Aborted, wmSeq(a, WmStage::Aborted),
            {{"attempt", std::to_string(a)}, {"reason", "submission not completed"}});
      return;
    }
    if (age < cfg_.reconcileGrace) return;
    log(rec.jobId, lb::Kind::Accepted, 2, {});
  } else if (rec.state == lb::JobState::WAITING || rec.state == lb::JobState::READY) {
    if (findEvent(rec, lb::Kind::Staged, a) || age < cfg_.reconcileGrace) return;
  } else {
    return;
  }
  spdlog::info("wm: re-enqueueing orphaned job {} attempt {}", rec.jobId, a);
  enqueueRequest(Request{RequestKind::Submit, rec.jobId, rec.owner, rec.jdl, a, std::nullopt,
                         previousDestination(rec, a - 1)});
}

void WorkloadManager::monitor() {
  std::set<std::string> queued;
  for (const auto& item : requests_.list()) {
    auto j = nlohmann::json::parse(item.payload, nullptr, false);
    if (j.is_object() && j.contains("jobId") && j["jobId"].is_string()) queued.insert(j["jobId"].get<std::string>());
  }
  for (const auto& id : store_.jobIds()) {
    try {
      auto rec = store_.find(id);
      if (!rec) continue;
      if (rec->state == lb::JobState::ABORTED) {
        abortHandler(*rec);
      } else if (!lb::isTerminal(rec->state)) {
        dagEngine(*rec);
        if (auto fresh = store_.find(id)) reconcile(*fresh, queued);
      }
    } catch (const Error& e) {
      spdlog::warn("wm: monitor pass on {} failed: {}", id, e.what());
    }
  }
}

void WorkloadManager::run(const std::atomic<bool>& stop) {
  recover();
  while (!stop.load()) {
    bool worked = false;
    try {
      worked = processOne();
    } catch (const std::exception& e) {
      spdlog::error("wm: {}", e.what());
    }
    auto now = std::chrono::steady_clock::now();
    if (now - lastMonitor_ >= cfg_.monitorInterval) {
      lastMonitor_ = now;
      try {
        monitor();
      } catch (const std::exception& e) {
        spdlog::error("wm monitor: {}", e.what());
      }
    }
    if (!worked) std::this_thread::sleep_for(cfg_.pollInterval);
  }
}

}  // namespace wms::wm
