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

#include <gtest/gtest.h>

#include <filesystem>
#include <functional>

#include "wms/broker/registry.hpp"
#include "wms/error.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"
#include "wms/wm/adapter.hpp"
#include "wms/wm/dag_run.hpp"
#include "wms/wm/manager.hpp"
#include "wms/wm/partition.hpp"

using namespace wms;
using namespace wms::wm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("wm_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

Errc codeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::BadRequest;
}

jdl::JobDescription job(const std::string& body) {
  auto v = jdl::validateJobText("[ " + body + " ]");
  EXPECT_TRUE(v.ok()) << jdl::describe(v.violations);
  return *v.value;
}

lb::Event ev(const std::string& jobId, lb::Source src, std::int64_t sseq, lb::Kind kind, lb::Payload p = {}) {
  lb::Event e;
  e.jobId = jobId;
  e.source = src;
  e.sourceSeq = sseq;
  e.timestamp = util::nowMs();
  e.kind = kind;
  e.payload = std::move(p);
  return e;
}

void registerJob(lb::Store& store, const std::string& id, const std::string& jdlText, bool accepted = true) {
  store.logEvent(ev(id, lb::Source::Gateway, 1, lb::Kind::Registered, {{"owner", "alice"}, {"jdl", jdlText}}));
  if (accepted) store.logEvent(ev(id, lb::Source::Gateway, 2, lb::Kind::Accepted));
}

void finishJob(lb::Store& store, const std::string& id, int exitCode, int attempt = 1) {
  store.logEvent(ev(id, lb::Source::LogMonitor, 1000 + attempt, lb::Kind::Done,
                    {{"attempt", std::to_string(attempt)}, {"exitCode", std::to_string(exitCode)}}));
}

struct WmFixture {
  TempDir dir;
  Config cfg;
  WmFixture() {
    cfg.spool = dir.path;
    cfg.noMatchRetries = 0;
    cfg.noMatchBackoff = std::chrono::milliseconds(0);
    cfg.reconcileGrace = std::chrono::milliseconds(0);
    broker::Registry reg(Spool(dir.path).registry());
    reg.loadFixtures(fs::path(WMS_FIXTURE_DIR) / "resources");
  }
  std::vector<nlohmann::json> executorItems() {
    std::vector<nlohmann::json> out;
    for (const auto& it : fsq::Queue(Spool(dir.path).executorSubmit()).list())
      out.push_back(nlohmann::json::parse(it.payload));
    return out;
  }
};

constexpr const char* kId = "wms-20260101-a1b2c3";

}  // namespace

TEST(Partition, SplitStepsExhaustive) {
  for (std::int64_t steps = 1; steps <= 64; ++steps) {
    for (std::int64_t k = 1; k <= steps; ++k) {
      auto r = splitSteps(steps, k);
      ASSERT_EQ(static_cast<std::int64_t>(r.size()), k);
      std::int64_t next = 0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        ASSERT_EQ(r[i].first, next);
        std::int64_t len = r[i].second - r[i].first;
        ASSERT_TRUE(len == steps / k || len == steps / k + 1) << steps << "/" << k;
        if (i > 0) ASSERT_LE(len, r[i - 1].second - r[i - 1].first);
        next = r[i].second;
      }
      ASSERT_EQ(next, steps);
    }
  }
  EXPECT_THROW(splitSteps(3, 4), Error);
  EXPECT_THROW(splitSteps(3, 0), Error);
}

TEST(Partition, BuildsSubJobsAndAggregator) {
  auto j = job(R"(Executable = "sim.sh"; JobType = "Partitionable"; JobSteps = 10; SubJobs = 3; RetryCount = 2;)");
  auto dag = partitionJob(j, kId);
  ASSERT_EQ(dag.nodes.size(), 4u);
  ASSERT_EQ(dag.aggregatorNode, std::string(kAggregatorNode));
  const std::pair<std::int64_t, std::int64_t> want[] = {{0, 3}, {4, 6}, {7, 9}};
  for (int i = 0; i < 3; ++i) {
    const auto& n = dag.nodes.at("n" + std::to_string(i));
    EXPECT_EQ(n.jobType, jdl::JobType::Checkpointable);
    ASSERT_TRUE(n.stepRange);
    EXPECT_EQ(*n.stepRange, want[i]);
    EXPECT_FALSE(n.subJobs);
    EXPECT_EQ(n.retryCount, 2);
  }
  const auto& agg = dag.nodes.at(kAggregatorNode);
  EXPECT_EQ(agg.executable, "wms-chkpt");
  EXPECT_NE(agg.arguments.find(std::string(kId) + ".n2"), std::string::npos);
  EXPECT_EQ(dag.parents(kAggregatorNode).size(), 3u);
  EXPECT_EQ(nodeNameOf(std::string(kId) + ".n1"), "n1");
}

TEST(Partition, MergeStatesNamespacesAndDetectsIncomplete) {
  TempDir d;
  lb::Store store(d.path);
  std::string a = std::string(kId) + ".n0", b = std::string(kId) + ".n1";
  registerJob(store, a, "[ Executable = \"x\"; ]");
  registerJob(store, b, "[ Executable = \"x\"; ]");
  store.saveState(a, {{"sum", "1"}});
  store.saveState(a, {{"sum", "6"}, {"last", "3"}});
  finishJob(store, a, 0);
  EXPECT_EQ(codeOf([&] { mergeStates(store, {a, b}); }), Errc::SubJobIncomplete);
  store.saveState(b, {{"sum", "15"}});
  EXPECT_EQ(codeOf([&] { mergeStates(store, {a, b}); }), Errc::SubJobIncomplete);
  finishJob(store, b, 0);
  auto m = mergeStates(store, {b, a});
  lb::StatePairs want{{"n0.last", "3"}, {"n0.sum", "6"}, {"n1.sum", "15"}};
  EXPECT_EQ(m, want);
}

TEST(DagRun, NodeStatusFollowsLbStates) {
  TempDir d;
  lb::Store store(d.path);
  auto dag = jdl::validateDagText(R"([ Type = "DAG"; Nodes = [ A = [ Executable = "a"; ]; B = [ Executable = "b"; ];
      C = [ Executable = "c"; ]; D = [ Executable = "d"; ]; ]; Dependencies = { { "A", "B" }, { "A", "C" }, { "C", "D" } }; ])");
  ASSERT_TRUE(dag.ok());
  auto st = dagNodeStatus(store, kId, *dag.value);
  EXPECT_EQ(st["A"], NodeStatus::Ready);
  EXPECT_EQ(st["B"], NodeStatus::Idle);

  registerJob(store, nodeJobId(kId, "A"), "[ Executable = \"a\"; ]");
  st = dagNodeStatus(store, kId, *dag.value);
  EXPECT_EQ(st["A"], NodeStatus::Submitted);
  EXPECT_EQ(st["B"], NodeStatus::Idle);

  finishJob(store, nodeJobId(kId, "A"), 0);
  st = dagNodeStatus(store, kId, *dag.value);
  EXPECT_EQ(st["A"], NodeStatus::Done);
  EXPECT_EQ(st["B"], NodeStatus::Ready);
  EXPECT_EQ(st["C"], NodeStatus::Ready);
  EXPECT_EQ(st["D"], NodeStatus::Idle);

  registerJob(store, nodeJobId(kId, "C"), "[ Executable = \"c\"; ]");
  finishJob(store, nodeJobId(kId, "C"), 3);
  st = dagNodeStatus(store, kId, *dag.value);
  EXPECT_EQ(st["C"], NodeStatus::Failed);
  EXPECT_EQ(st["D"], NodeStatus::Unreachable);
  EXPECT_EQ(st["B"], NodeStatus::Ready);
}

TEST(DagRun, AbortedNodeWithRetryBudgetStaysSubmitted) {
  TempDir d;
  lb::Store store(d.path);
  auto dag = jdl::validateDagText(R"([ Type = "DAG"; Nodes = [ A = [ Executable = "a"; RetryCount = 1; ]; ]; ])");
  ASSERT_TRUE(dag.ok());
  std::string a = nodeJobId(kId, "A");
  registerJob(store, a, "[ Executable = \"a\"; RetryCount = 1; ]");
  store.logEvent(ev(a, lb::Source::LogMonitor, 5, lb::Kind::Aborted, {{"attempt", "1"}, {"reason", "x"}}));
  EXPECT_EQ(dagNodeStatus(store, kId, *dag.value)["A"], NodeStatus::Submitted);
  store.logEvent(ev(a, lb::Source::WM, 200, lb::Kind::Resubmitted, {{"attempt", "2"}}));
  store.logEvent(ev(a, lb::Source::LogMonitor, 6, lb::Kind::Aborted, {{"attempt", "2"}, {"reason", "x"}}));
  EXPECT_EQ(dagNodeStatus(store, kId, *dag.value)["A"], NodeStatus::Failed);
}

TEST(Adapter, CheckpointFileRoundTrip) {
  TempDir d;
  Spool spool(d.path);
  lb::StatePairs pairs{{"i", "7"}, {"sum", "28"}, {"note", "a b=c"}};
  auto file = writeCheckpointFile(spool, kId, 2, pairs);
  EXPECT_EQ(file, spool.checkpoint(kId) / "2.state");
  EXPECT_EQ(readCheckpointFile(file), pairs);
}

TEST(Adapter, DescriptorCarriesEnvAndSandbox) {
  TempDir d;
  Spool spool(d.path);
  fs::create_directories(spool.input(kId));
  util::writeFileAtomic(spool.input(kId) / "run.sh", "echo hi\n");
  std::string text = R"([ Executable = "run.sh"; Arguments = "1 2"; InputSandbox = { "run.sh" };
      OutputSandbox = { "out.txt" }; StdOutput = "out.txt"; JobType = "Checkpointable"; JobSteps = 5;
      SubmitTo = "ce-alpha"; ChosenSE = "se-disk"; ])";
  AdaptContext ctx{kId, 2, "alice", d.path, kId, std::string("/tmp/ck")};
  auto desc = adaptJob(text, ctx);
  EXPECT_EQ(desc.ceId, "ce-alpha");
  EXPECT_EQ(desc.seId, std::string("se-disk"));
  EXPECT_EQ(desc.idemKey(), std::string(kId) + "/2");
  EXPECT_EQ(desc.env.at("WMS_JOB_ID"), kId);
  EXPECT_EQ(desc.env.at("WMS_ATTEMPT"), "2");
  EXPECT_EQ(desc.env.at("WMS_CHECKPOINT_IN"), "/tmp/ck");
  EXPECT_EQ(desc.env.at("WMS_STEP_FIRST"), "0");
  EXPECT_EQ(desc.env.at("WMS_STEP_LAST"), "4");
  auto back = descriptorFromJson(toJson(desc));
  EXPECT_EQ(toJson(back), toJson(desc));

  EXPECT_EQ(codeOf([&] { adaptJob(R"([ Executable = "run.sh"; ])", ctx); }), Errc::ValidationFailed);
  EXPECT_EQ(codeOf([&] {
              adaptJob(R"([ Executable = "x"; InputSandbox = { "missing.dat" }; SubmitTo = "ce-alpha"; ])", ctx);
            }),
            Errc::MissingSandboxFile);
}

TEST(Adapter, HelperChainRevalidatesEachStage) {
  TempDir d;
  broker::Registry reg;
  reg.loadFixtures(fs::path(WMS_FIXTURE_DIR) / "resources");
  BrokerHelper bh(reg.snapshot(), broker::SelectOptions{});
  AdapterHelper ah(AdaptContext{kId, 1, "alice", d.path, kId, std::nullopt});
  auto desc = runHelperChain(R"([ Executable = "/bin/true"; Rank = other.PricePerCpuSecond; ])", bh, ah);
  EXPECT_EQ(desc.ceId, "ce-gamma");
  EXPECT_THROW(runHelperChain("[ Arguments = \"no executable\"; ]", bh, ah), Error);

  struct Broken : Helper {
    std::string resolve(std::string_view) override { return "[ Executable = ; ]"; }
  };
  Broken broken;
  BrokerHelper bh2(reg.snapshot(), broker::SelectOptions{});
  // A stage producing garbage must be caught by validation of its output.
  EXPECT_THROW(ah.resolve(broken.resolve("")), Error);
}

TEST(Manager, SubmitMatchesAndStagesOnce) {
  WmFixture f;
  WorkloadManager wm(f.cfg);
  std::string jdlText = R"([ Executable = "/bin/true"; ])";
  registerJob(wm.store(), kId, jdlText);
  Request r{RequestKind::Submit, kId, "alice", jdlText, 1, std::nullopt, {}};
  wm.requests().enqueue(toJson(r).dump());
  wm.requests().enqueue(toJson(r).dump());  // duplicate delivery
  EXPECT_TRUE(wm.processOne());
  EXPECT_TRUE(wm.processOne());
  EXPECT_FALSE(wm.processOne());

  auto rec = wm.store().record(kId);
  EXPECT_EQ(rec.state, lb::JobState::READY);
  EXPECT_EQ(rec.destination, std::string("ce-alpha"));  // most FreeCPUs
  auto items = f.executorItems();
  ASSERT_EQ(items.size(), 1u);
  EXPECT_EQ(items[0]["op"], "submit");
  EXPECT_EQ(items[0]["descriptor"]["ceId"], "ce-alpha");
}

TEST(Manager, NoMatchAbortsAndRetryBudgetResubmitsElsewhere) {
  WmFixture f;
  WorkloadManager wm(f.cfg);
  std::string none = R"([ Executable = "/bin/true"; Requirements = other.TotalCPUs > 100; ])";
  registerJob(wm.store(), "wms-20260101-000001", none);
  wm.handle(Request{RequestKind::Submit, "wms-20260101-000001", "alice", none, 1, std::nullopt, {}});
  EXPECT_EQ(wm.store().record("wms-20260101-000001").state, lb::JobState::ABORTED);

  std::string retry = R"([ Executable = "/bin/true"; RetryCount = 1; ])";
  registerJob(wm.store(), kId, retry);
  wm.handle(Request{RequestKind::Submit, kId, "alice", retry, 1, std::nullopt, {}});
  wm.store().logEvent(ev(kId, lb::Source::LogMonitor, 3, lb::Kind::Aborted, {{"attempt", "1"}, {"reason", "node lost"}}));
  wm.monitor();
  auto rec = wm.store().record(kId);
  EXPECT_EQ(rec.state, lb::JobState::WAITING);
  EXPECT_EQ(rec.attempt, 2);
  while (wm.processOne()) {
  }
  rec = wm.store().record(kId);
  EXPECT_EQ(rec.state, lb::JobState::READY);
  EXPECT_EQ(rec.attempt, 2);
  EXPECT_NE(rec.destination, std::string("ce-alpha"));

  wm.store().logEvent(ev(kId, lb::Source::LogMonitor, 4, lb::Kind::Aborted, {{"attempt", "2"}, {"reason", "node lost"}}));
  wm.monitor();
  rec = wm.store().record(kId);
  EXPECT_EQ(rec.state, lb::JobState::ABORTED);  // budget exhausted
  EXPECT_EQ(rec.attempt, 2);
}

TEST(Manager, ReconcilerPicksUpOrphanedJobs) {
  WmFixture f;
  WorkloadManager wm(f.cfg);
  std::string jdlText = R"([ Executable = "/bin/true"; ])";
  registerJob(wm.store(), kId, jdlText);
  wm.monitor();
  EXPECT_EQ(wm.requests().size(), 1u);
  wm.monitor();  // already queued
  EXPECT_EQ(wm.requests().size(), 1u);
  while (wm.processOne()) {
  }
  EXPECT_EQ(wm.store().record(kId).state, lb::JobState::READY);

  // Registration completed but the gateway died before Accepted.
  registerJob(wm.store(), "wms-20260101-000002", jdlText, false);
  wm.monitor();
  while (wm.processOne()) {
  }
  EXPECT_EQ(wm.store().record("wms-20260101-000002").state, lb::JobState::READY);
}

TEST(Manager, CancelBeforeStagingAndAfter) {
  WmFixture f;
  WorkloadManager wm(f.cfg);
  std::string jdlText = R"([ Executable = "/bin/true"; ])";
  registerJob(wm.store(), kId, jdlText);
  wm.handle(Request{RequestKind::Cancel, kId, "alice", "", 1, std::nullopt, {}});
  EXPECT_EQ(wm.store().record(kId).state, lb::JobState::CANCELLED);

  registerJob(wm.store(), "wms-20260101-000003", jdlText);
  wm.handle(Request{RequestKind::Submit, "wms-20260101-000003", "alice", jdlText, 1, std::nullopt, {}});
  wm.handle(Request{RequestKind::Cancel, "wms-20260101-000003", "alice", "", 1, std::nullopt, {}});
  auto items = f.executorItems();
  ASSERT_EQ(items.size(), 2u);
  EXPECT_EQ(items[1]["op"], "cancel");
  EXPECT_EQ(wm.store().record("wms-20260101-000003").state, lb::JobState::READY);
}

TEST(Manager, DagRunsNodesInDependencyOrder) {
  WmFixture f;
  WorkloadManager wm(f.cfg);
  std::string dagText = R"([ Type = "DAG"; Nodes = [ A = [ Executable = "/bin/true"; ]; B = [ Executable = "/bin/true"; ]; ];
      Dependencies = { { "A", "B" } }; ])";
  registerJob(wm.store(), kId, dagText);
  wm.handle(Request{RequestKind::SubmitDag, kId, "alice", dagText, 1, std::nullopt, {}});
  std::string a = nodeJobId(kId, "A"), b = nodeJobId(kId, "B");
  EXPECT_TRUE(wm.store().exists(a));
  EXPECT_FALSE(wm.store().exists(b));
  EXPECT_EQ(wm.store().record(kId).state, lb::JobState::RUNNING);
  while (wm.processOne()) {
  }
  EXPECT_EQ(wm.store().record(a).state, lb::JobState::READY);
  finishJob(wm.store(), a, 0);
  wm.monitor();
  ASSERT_TRUE(wm.store().exists(b));
  while (wm.processOne()) {
  }
  finishJob(wm.store(), b, 0);
  wm.monitor();
  auto rec = wm.store().record(kId);
  EXPECT_EQ(rec.state, lb::JobState::DONE_OK);
  EXPECT_EQ(rec.exitCode, 0);
}

TEST(Manager, FailedDagNodeMakesDescendantsUnreachable) {
  WmFixture f;
  WorkloadManager wm(f.cfg);
  std::string dagText = R"([ Type = "DAG"; Nodes = [ A = [ Executable = "/bin/false"; ]; B = [ Executable = "/bin/true"; ]; ];
      Dependencies = { { "A", "B" } }; ])";
  registerJob(wm.store(), kId, dagText);
  wm.handle(Request{RequestKind::SubmitDag, kId, "alice", dagText, 1, std::nullopt, {}});
  finishJob(wm.store(), nodeJobId(kId, "A"), 1);
  wm.monitor();
  auto b = wm.store().record(nodeJobId(kId, "B"));
  EXPECT_EQ(b.state, lb::JobState::ABORTED);
  auto rec = wm.store().record(kId);
  EXPECT_EQ(rec.state, lb::JobState::DONE_FAILED);
}

TEST(Manager, MalformedRequestIsDeadLettered) {
  WmFixture f;
  f.cfg.maxAttempts = 2;
  WorkloadManager wm(f.cfg);
  std::string jdlText = R"([ Executable = "/bin/true"; ])";
  registerJob(wm.store(), kId, jdlText);
  wm.requests().enqueue(R"({"kind":"Bogus","jobId":"wms-20260101-a1b2c3"})");
  EXPECT_TRUE(wm.processOne());
  EXPECT_EQ(wm.requests().size(), 1u);
  EXPECT_TRUE(wm.processOne());
  EXPECT_EQ(wm.requests().size(), 0u);
  EXPECT_EQ(wm.store().record(kId).events.back().kind, lb::Kind::Refused);
  EXPECT_TRUE(fs::exists(f.dir.path / "dead-letter"));
}

TEST(Manager, ResubmitFromStateRestoresThatState) {
  WmFixture f;
  WorkloadManager wm(f.cfg);
  std::string jdlText = R"([ Executable = "/bin/true"; JobType = "Checkpointable"; JobSteps = 3; ])";
  registerJob(wm.store(), kId, jdlText);
  wm.handle(Request{RequestKind::Submit, kId, "alice", jdlText, 1, std::nullopt, {}});
  wm.store().saveState(kId, {{"step", "1"}});
  wm.store().saveState(kId, {{"step", "2"}});
  wm.store().saveState(kId, {{"step", "3"}});
  finishJob(wm.store(), kId, 0);

  wm.handle(Request{RequestKind::ResubmitFromState, kId, "alice", jdlText, 2, 2, {}});
  auto rec = wm.store().record(kId);
  EXPECT_EQ(rec.attempt, 2);
  EXPECT_EQ(rec.state, lb::JobState::READY);
  auto items = f.executorItems();
  ASSERT_EQ(items.size(), 2u);
  auto env = items[1]["descriptor"]["env"];
  ASSERT_TRUE(env.contains("WMS_CHECKPOINT_IN"));
  EXPECT_EQ(readCheckpointFile(env["WMS_CHECKPOINT_IN"].get<std::string>()), (lb::StatePairs{{"step", "2"}}));
  EXPECT_FALSE(items[0]["descriptor"]["env"].contains("WMS_CHECKPOINT_IN"));

  // A state that was never saved aborts the new attempt.
  wm.handle(Request{RequestKind::ResubmitFromState, kId, "alice", jdlText, 3, 9, {}});
  rec = wm.store().record(kId);
  EXPECT_EQ(rec.attempt, 3);
  EXPECT_EQ(rec.state, lb::JobState::ABORTED);
}
