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

#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>
#include <unistd.h>

#include "wms/broker/broker.hpp"
#include "wms/broker/registry.hpp"
#include "wms/classad/classad.hpp"
#include "wms/classad/eval.hpp"
#include "wms/fsq/queue.hpp"
#include "wms/lb/event.hpp"

using namespace wms;
namespace fs = std::filesystem;

namespace {

const char* kJob = R"([ Executable = "sim"; Requirements = other.Status == "Production" && other.FreeCPUs >= 1
    && member("se-disk", other.CloseSEs); Rank = other.FreeCPUs * 10 - other.PricePerCpuSecond; ])";

classad::ClassAd fixtureCE(const std::string& id) {
  broker::Registry reg;
  reg.loadFixtures(WMS_FIXTURE_DIR "/resources");
  return reg.get(id)->ad;
}

void BM_ParseAd(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(classad::parseAd(kJob));
}
BENCHMARK(BM_ParseAd);

void BM_MatchTwo(benchmark::State& state) {
  auto job = classad::parseAd(kJob);
  auto ce = fixtureCE("ce-beta");
  for (auto _ : state) benchmark::DoNotOptimize(classad::matchTwo(job, ce));
}
BENCHMARK(BM_MatchTwo);

// Matchmaking over a registry of N synthetic CEs.
void BM_FindAndRank(benchmark::State& state) {
  auto job = classad::parseAd(kJob);
  broker::Snapshot snap;
  std::mt19937 rng(1);
  for (int i = 0; i < state.range(0); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "ce-%04d", i);
    auto ad = classad::parseAd("[ Type = \"CE\"; Status = \"Production\"; CloseSEs = { \"se-disk\" }; ]");
    ad.set("Id", classad::Value(std::string(id)));
    ad.set("FreeCPUs", classad::Value(static_cast<std::int64_t>(rng() % 8)));
    ad.set("PricePerCpuSecond", classad::Value(static_cast<std::int64_t>(1 + rng() % 5)));
    snap.push_back({id, true, std::move(ad), 0});
  }
  for (auto _ : state) {
    auto m = broker::findMatches(job, snap);
    benchmark::DoNotOptimize(broker::rankMatches(job, m, snap));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FindAndRank)->RangeMultiplier(4)->Range(4, 1024)->Complexity();

void BM_DeriveState(benchmark::State& state) {
  using K = lb::Kind;
  std::vector<lb::Event> events;
  const K order[] = {K::Registered, K::Accepted, K::Matched, K::Staged, K::Committed, K::Running, K::Chkpt, K::Done};
  int seq = 1;
  for (int a = 1; a <= state.range(0); ++a)
    for (K k : order) {
      lb::Event e;
      e.jobId = "j";
      e.kind = k;
      e.sourceSeq = seq++;
      e.payload["attempt"] = std::to_string(a);
      if (k == K::Done) e.payload["exitCode"] = a == state.range(0) ? "0" : "1";
      events.push_back(std::move(e));
    }
  std::shuffle(events.begin(), events.end(), std::mt19937(3));
  for (auto _ : state) benchmark::DoNotOptimize(lb::deriveState(events));
}
BENCHMARK(BM_DeriveState)->Arg(1)->Arg(4)->Arg(16);

struct QueueDir {
  fs::path path = fs::temp_directory_path() / ("wms-bench-queue-" + std::to_string(::getpid()));
  QueueDir() { fs::remove_all(path); }
  ~QueueDir() { fs::remove_all(path); }
};

void BM_QueueRoundTrip(benchmark::State& state) {
  QueueDir dir;
  fsq::Queue q(dir.path);
  const std::string payload = "{\"blob\":\"" + std::string(state.range(0), 'x') + "\"}";
  for (auto _ : state) {
    q.enqueue(payload);
    auto item = q.claim("bench");
    q.settle(item->seq, fsq::Disposition::Ack);
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_QueueRoundTrip)->Arg(256)->Arg(64 << 10);

}  // namespace

BENCHMARK_MAIN();
