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
#include <random>
#include <thread>

#include "lb_oracle.hpp"
#include "wms/error.hpp"
#include "wms/lb/store.hpp"
#include "wms/util/fs.hpp"

using namespace wms;
using namespace wms::lb;
namespace fs = std::filesystem;

namespace {

struct TempStore {
  fs::path dir = fs::temp_directory_path() / ("wms-lb-" + util::randomHex(8));
  Store store{dir};
  ~TempStore() { fs::remove_all(dir); }
};

Event ev(const std::string& job, Kind k, Source src, std::int64_t sseq, Payload p = {}) {
  Event e;
  e.jobId = job;
  e.kind = k;
  e.source = src;
  e.sourceSeq = sseq;
  e.payload = std::move(p);
  return e;
}

void registerJob(Store& s, const std::string& id, const std::string& owner = "alice") {
  s.logEvent(ev(id, Kind::Registered, Source::Gateway, 1, {{"owner", owner}, {"jdl", "[ Executable = \"x\"; ]"}}));
}

std::vector<Event> seqOf(std::initializer_list<testgen::Letter> letters) {
  std::vector<Event> out;
  int i = 1;
  for (const auto& l : letters) out.push_back(testgen::makeEvent(l, i++));
  return out;
}

}  // namespace

TEST(LbDerive, TransitionTable) {
  using K = Kind;
  auto d = deriveState(seqOf({{K::Registered}, {K::Accepted}, {K::Matched}, {K::Committed}, {K::Running}, {K::Done, 0}}));
  EXPECT_EQ(d, (Derived{JobState::DONE_OK, 1}));
  d = deriveState(seqOf({{K::Registered}, {K::Done, 3}}));
  EXPECT_EQ(d.state, JobState::DONE_FAILED);
  d = deriveState(seqOf({{K::Registered}, {K::Refused}}));
  EXPECT_EQ(d.state, JobState::ABORTED);
}

TEST(LbDerive, ResubmissionOpensNewAttempt) {
  using K = Kind;
  auto d = deriveState(seqOf({{K::Registered}, {K::Accepted, -1, 1}, {K::Aborted, -1, 1}, {K::Resubmitted, -1, 2},
                              {K::Matched, -1, 2}, {K::Running, -1, 2}}));
  EXPECT_EQ(d, (Derived{JobState::RUNNING, 2}));
  // Baseline of a fresh attempt is WAITING.
  d = deriveState(seqOf({{K::Registered}, {K::Aborted, -1, 1}, {K::Resubmitted, -1, 2}}));
  EXPECT_EQ(d, (Derived{JobState::WAITING, 2}));
  // Untagged resubmission still counts.
  d = deriveState(seqOf({{K::Registered}, {K::Aborted}, {K::Resubmitted}}));
  EXPECT_EQ(d, (Derived{JobState::WAITING, 2}));
}

TEST(LbDerive, OutOfOrderRunningBeforeMatched) {
  using K = Kind;
  auto d = deriveState(seqOf({{K::Registered}, {K::Running}, {K::Matched}}));
  EXPECT_EQ(d.state, JobState::RUNNING);
}

TEST(LbDerive, NonStateKindsHaveNoEffect) {
  using K = Kind;
  auto d = deriveState(seqOf({{K::Registered}, {K::Staged}, {K::Chkpt}, {K::UserTag}}));
  EXPECT_EQ(d.state, JobState::SUBMITTED);
}

TEST(LbDerive, PermutationRobustUntaggedUpToFive) {
  auto rep = testgen::checkAllPermutations(testgen::untaggedAlphabet(), 5);
  EXPECT_EQ(rep.disagreements, 0) << rep.firstFailure;
  EXPECT_GT(rep.multisets, 10000);
}

TEST(LbDerive, PermutationRobustTaggedUpToFive) {
  auto rep = testgen::checkAllPermutations(testgen::taggedAlphabet(), 5);
  EXPECT_EQ(rep.disagreements, 0) << rep.firstFailure;
}

TEST(LbStore, RegisterAndIdempotentDuplicates) {
  TempStore t;
  registerJob(t.store, "j1");
  EXPECT_EQ(t.store.record("j1").state, JobState::SUBMITTED);
  EXPECT_EQ(t.store.record("j1").owner, "alice");
  auto acc = ev("j1", Kind::Accepted, Source::Gateway, 2);
  EXPECT_TRUE(t.store.logEvent(acc));
  EXPECT_FALSE(t.store.logEvent(acc));
  EXPECT_EQ(t.store.record("j1").events.size(), 2u);
  EXPECT_EQ(t.store.record("j1").state, JobState::WAITING);
}

TEST(LbStore, UnknownJob) {
  TempStore t;
  try {
    t.store.logEvent(ev("nope", Kind::Running, Source::LogMonitor, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownJob);
  }
  EXPECT_FALSE(t.store.exists("nope"));
}

TEST(LbStore, EventLineFormat) {
  TempStore t;
  registerJob(t.store, "fmt");
  std::string text = util::readFile(t.store.eventFile("fmt"));
  EXPECT_EQ(text.rfind(R"({"job":"fmt","src":"Gateway","sseq":1,"ts":)", 0), 0u) << text;
  EXPECT_NE(text.find(R"("kind":"Registered","payload":{)"), std::string::npos);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(t.store.eventFile("fmt").parent_path().filename().string().size(), 2u);
}

TEST(LbStore, TornTailIsIgnoredAndSealed) {
  TempStore t;
  registerJob(t.store, "torn");
  util::appendDurable(t.store.eventFile("torn"), R"({"job":"torn","src":"WM","ss)");
  EXPECT_EQ(t.store.record("torn").events.size(), 1u);
  t.store.logEvent(ev("torn", Kind::Accepted, Source::Gateway, 2));
  EXPECT_EQ(t.store.record("torn").state, JobState::WAITING);
  EXPECT_EQ(t.store.record("torn").events.size(), 2u);
}

TEST(LbStore, QueryByTagStateDestination) {
  TempStore t;
  struct J {
    std::string id, prod, dest;
    bool running;
  };
  std::vector<J> jobs = {{"a", "xyz", "X", true}, {"b", "xyz", "Y", true}, {"c", "xyz", "Z", true},
                         {"d", "abc", "X", true}, {"e", "xyz", "X", false}};
  for (const auto& j : jobs) {
    registerJob(t.store, j.id);
    t.store.logEvent(ev(j.id, Kind::UserTag, Source::Gateway, 10, {{"name", "production"}, {"value", j.prod}}));
    t.store.logEvent(ev(j.id, Kind::Matched, Source::WM, 102, {{"destination", j.dest}, {"attempt", "1"}}));
    if (j.running) t.store.logEvent(ev(j.id, Kind::Running, Source::LogMonitor, 5, {{"destination", j.dest}}));
  }
  auto q = parseQuery("tag:production=xyz,state=running,destination=X|Y");
  EXPECT_EQ(t.store.query(q), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(parseQuery("colour=red"), Error);
  EXPECT_THROW(t.store.query({}), Error);
  EXPECT_TRUE(t.store.query(parseQuery("state=DONE_OK")).empty());
}

TEST(LbStore, QueryEqualsLinearScanOracle) {
  TempStore t;
  std::mt19937 rng(99);
  const char* owners[] = {"alice", "bob"};
  const char* dests[] = {"ce1", "ce2", "ce3"};
  const char* prods[] = {"p1", "p2"};
  for (int i = 0; i < 20; ++i) {
    std::string id = "job" + std::to_string(i);
    registerJob(t.store, id, owners[rng() % 2]);
    t.store.logEvent(ev(id, Kind::UserTag, Source::Gateway, 10, {{"name", "prod"}, {"value", prods[rng() % 2]}}));
    int stage = static_cast<int>(rng() % 4);
    if (stage >= 1) t.store.logEvent(ev(id, Kind::Matched, Source::WM, 102, {{"destination", dests[rng() % 3]}}));
    if (stage >= 2) t.store.logEvent(ev(id, Kind::Running, Source::LogMonitor, 1));
    if (stage >= 3) t.store.logEvent(ev(id, Kind::Done, Source::LogMonitor, 2, {{"exitCode", "0"}}));
  }
  const char* fields[] = {"owner", "state", "destination", "tag:prod"};
  for (int iter = 0; iter < 200; ++iter) {
    Query q;
    for (int f = 0; f < 4; ++f) {
      if (rng() % 2) continue;
      Predicate p{fields[f], {}};
      int nv = 1 + static_cast<int>(rng() % 2);
      for (int v = 0; v < nv; ++v) {
        if (f == 0) p.values.push_back(owners[rng() % 2]);
        if (f == 1) p.values.push_back(rng() % 2 ? "READY" : "running");
        if (f == 2) p.values.push_back(dests[rng() % 3]);
        if (f == 3) p.values.push_back(prods[rng() % 2]);
      }
      q.push_back(p);
    }
    if (q.empty()) continue;
    std::vector<std::string> expected;
    for (const auto& id : t.store.jobIds()) {
      auto r = t.store.record(id);
      bool all = true;
      for (const auto& p : q) {
        bool any = false;
        for (const auto& v : p.values) {
          if (p.field == "owner") any |= r.owner == v;
          if (p.field == "state") any |= util::iequals(toString(r.state), v);
          if (p.field == "destination") any |= r.destination.value_or("") == v;
          if (p.field == "tag:prod") any |= r.userTags["prod"] == v;
        }
        all &= any;
      }
      if (all) expected.push_back(id);
    }
    EXPECT_EQ(t.store.query(q), expected);
  }
}

TEST(LbStore, CheckpointStates) {
  TempStore t;
  registerJob(t.store, "ck");
  EXPECT_THROW(t.store.getState("ck"), Error);
  EXPECT_EQ(t.store.saveState("ck", {{"step", "3"}}), 1);
  EXPECT_EQ(t.store.saveState("ck", {{"step", "4"}, {"sum", "10"}}), 2);
  EXPECT_EQ(t.store.getState("ck"), (StatePairs{{"step", "4"}, {"sum", "10"}}));
  EXPECT_EQ(t.store.getState("ck", 1), (StatePairs{{"step", "3"}}));
  try {
    t.store.getState("ck", 7);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoSuchState);
  }
  t.store.logEvent(ev("ck", Kind::Cleared, Source::UI, 1));
  try {
    t.store.saveState("ck", {{"x", "1"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownJob);
  }
  EXPECT_THROW(t.store.saveState("missing", {}), Error);
}

TEST(LbStore, ConcurrentSavesAreGapFree) {
  TempStore t;
  registerJob(t.store, "cc");
  std::vector<std::thread> th;
  for (int i = 0; i < 4; ++i)
    th.emplace_back([&] {
      Store mine(t.dir);
      for (int k = 0; k < 10; ++k) mine.saveState("cc", {{"k", std::to_string(k)}});
    });
  for (auto& x : th) x.join();
  auto r = t.store.record("cc");
  ASSERT_EQ(r.checkpointStates.size(), 40u);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(r.checkpointStates[i].seq, static_cast<std::int64_t>(i + 1));
}

TEST(LbStore, ReplayAndRebuildLeaveRecordsUnchanged) {
  TempStore t;
  registerJob(t.store, "r1");
  t.store.logEvent(ev("r1", Kind::Accepted, Source::Gateway, 2));
  t.store.logEvent(ev("r1", Kind::Running, Source::LogMonitor, 17, {{"destination", "ce1"}}));
  auto before = t.store.record("r1");
  auto q = parseQuery("destination=ce1");
  auto qBefore = t.store.query(q);
  for (const auto& e : before.events) EXPECT_FALSE(t.store.logEvent(e));
  t.store.rebuildIndex();
  Store fresh(t.dir);
  auto after = fresh.record("r1");
  EXPECT_EQ(after.state, before.state);
  EXPECT_EQ(after.events.size(), before.events.size());
  EXPECT_EQ(after.destination, before.destination);
  EXPECT_EQ(fresh.query(q), qBefore);
}
