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
#include <regex>
#include <set>
#include <thread>

#include "wms/cli/client.hpp"
#include "wms/error.hpp"
#include "wms/gateway/gateway.hpp"
#include "wms/jdl/dag.hpp"
#include "wms/util/base64.hpp"
#include "wms/util/fs.hpp"
#include "wms/wm/request.hpp"

using namespace wms;
using nlohmann::json;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("gateway_test_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Fixture {
  TempDir dir;
  Spool spool{dir.path};
  gateway::Gateway gw{{dir.path, "127.0.0.1", 0}};
  Fixture() {
    fs::create_directories(spool.accounts().parent_path());
    fs::copy_file(fs::path(WMS_FIXTURE_DIR) / "accounts.ad", spool.accounts());
  }

  json call(const std::string& cmd, json args, const std::string& user = "alice") {
    return gw.handle({{"id", "r1"}, {"cmd", cmd}, {"user", user}, {"args", std::move(args)}});
  }
  json ok(const std::string& cmd, json args, const std::string& user = "alice") {
    auto r = call(cmd, std::move(args), user);
    EXPECT_EQ(r["status"], "ok") << r.dump();
    return r["body"];
  }
  std::string errorCode(const std::string& cmd, json args, const std::string& user = "alice") {
    auto r = call(cmd, std::move(args), user);
    EXPECT_EQ(r["status"], "error") << r.dump();
    return r["body"].value("code", std::string());
  }
  std::vector<json> queued() {
    std::vector<json> out;
    for (const auto& it : fsq::Queue(spool.wmRequests()).list()) out.push_back(json::parse(it.payload));
    return out;
  }
};

std::string randomBytes(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(rng() & 0xff);
  return s;
}

}  // namespace

TEST(Base64, RoundTripsAllLengths) {
  for (std::size_t n = 0; n < 70; ++n) {
    auto s = randomBytes(n, static_cast<unsigned>(n));
    EXPECT_EQ(util::base64Decode(util::base64Encode(s)), s);
  }
  EXPECT_THROW(util::base64Decode("abc"), Error);
  EXPECT_THROW(util::base64Decode("ab=c"), Error);
  EXPECT_THROW(util::base64Decode("a*cd"), Error);
}

TEST(Gateway, EveryRequestGetsOneMatchingResponse) {
  Fixture f;
  auto bad = json::parse(f.gw.handleLine("{not json"));
  EXPECT_EQ(bad["status"], "error");
  EXPECT_EQ(bad["body"]["code"], "BadRequest");
  auto unknown = f.gw.handle({{"id", "x7"}, {"cmd", "frobnicate"}, {"user", "alice"}, {"args", json::object()}});
  EXPECT_EQ(unknown["id"], "x7");
  EXPECT_EQ(unknown["status"], "error");
  auto noCmd = f.gw.handle({{"id", "x8"}});
  EXPECT_EQ(noCmd["id"], "x8");
  EXPECT_EQ(noCmd["body"]["code"], "BadRequest");
  EXPECT_EQ(f.ok("ping", json::object()).count("time"), 1u);
}

TEST(Gateway, SubmitRegistersAcceptsAndEnqueues) {
  Fixture f;
  auto body = f.ok("submit", {{"jdl", R"([ Executable = "/bin/true"; UserTags = [ run = "7"; ]; ])"}});
  std::string id = body["jobId"];
  EXPECT_TRUE(std::regex_match(id, std::regex("wms-[0-9]{8}-[0-9a-f]{6}"))) << id;
  auto st = f.ok("status", {{"jobId", id}});
  EXPECT_EQ(st["state"], "WAITING");
  EXPECT_EQ(st["owner"], "alice");
  EXPECT_EQ(st["userTags"]["run"], "7");
  auto q = f.queued();
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0]["jobId"], id);
  EXPECT_EQ(f.ok("query", {{"query", "tag:run=7"}})["jobIds"], json::array({id}));
  EXPECT_EQ(f.errorCode("status", {{"jobId", "wms-20260101-ffffff"}}), "UnknownJob");
}

TEST(Gateway, InvalidJdlNeverReachesTheQueue) {
  Fixture f;
  auto r = f.call("submit", {{"jdl", R"([ Arguments = "x"; RetryCount = -1; ])"}});
  EXPECT_EQ(r["status"], "error");
  EXPECT_EQ(r["body"]["code"], "ValidationFailed");
  EXPECT_GE(r["body"]["violations"].size(), 2u);
  EXPECT_EQ(f.errorCode("submit", {{"jdl", "[ Executable = "}}), "ValidationFailed");
  EXPECT_EQ(f.errorCode("submit", {{"jdl", R"([ Executable = "x"; JobType = "Partitionable"; JobSteps = 2; SubJobs = 5; ])"}}),
            "ValidationFailed");
  EXPECT_EQ(f.errorCode("submit", {{"jdl", "[ Executable = \"x\"; ]"}}, ""), "Unauthorized");
  f.ok("submit", {{"jdl", "[ Executable = \"x\"; ]"}});
  f.ok("submit-dag", {{"jdl", R"([ Type = "DAG"; Nodes = [ A = [ Executable = "a"; ]; ]; ])"}});
  EXPECT_EQ(f.errorCode("submit-dag", {{"jdl", R"([ Type = "DAG"; Nodes = [ A = [ Executable = "a"; ]; ];
      Dependencies = { { "A", "A" } }; ])"}}),
            "ValidationFailed");
  auto q = f.queued();
  ASSERT_EQ(q.size(), 2u);
  for (const auto& item : q) {
    auto r2 = wm::requestFromJson(item);
    auto ad = classad::parseAd(r2.jdl);
    EXPECT_TRUE(jdl::isDagAd(ad) ? jdl::validateDag(ad).ok() : jdl::validateJob(ad).ok());
  }
}

TEST(Gateway, SandboxUploadChunkingAndStart) {
  Fixture f;
  std::string id = f.ok("register", {{"jdl", R"([ Executable = "copy.sh"; InputSandbox = { "copy.sh", "data/in.bin" };
      OutputSandbox = { "out.bin" }; ])"}})["jobId"];
  EXPECT_EQ(f.ok("status", {{"jobId", id}})["state"], "SUBMITTED");
  EXPECT_TRUE(f.queued().empty());
  EXPECT_EQ(f.errorCode("start", {{"jobId", id}}), "MissingSandboxFile");

  auto put = [&](const std::string& name, std::int64_t seq, const std::string& data, bool eof) {
    return f.call("sandbox-put", {{"jobId", id}, {"name", name}, {"seq", seq}, {"data", util::base64Encode(data)}, {"eof", eof}});
  };
  EXPECT_EQ(put("other.txt", 1, "x", true)["body"]["code"], "UnknownFile");
  EXPECT_EQ(put("copy.sh", 1, "#!/bin/sh\n", false)["status"], "ok");
  EXPECT_EQ(put("copy.sh", 3, "cp", true)["body"]["code"], "ChunkGap");

  const std::string big = randomBytes(1 << 20, 11);
  std::int64_t seq = 1;
  for (std::size_t off = 0; off < big.size(); off += gateway::kChunkSize) {
    auto chunk = big.substr(off, gateway::kChunkSize);
    ASSERT_EQ(put("data/in.bin", seq++, chunk, off + chunk.size() >= big.size())["status"], "ok");
  }
  EXPECT_EQ(put("copy.sh", 1, "#!/bin/sh\ncp data/in.bin out.bin\n", true)["status"], "ok");
  EXPECT_EQ(util::readFile(f.spool.input(id) / "data/in.bin"), big);

  EXPECT_EQ(f.errorCode("start", {{"jobId", id}}, "mallory"), "Unauthorized");
  f.ok("start", {{"jobId", id}});
  EXPECT_EQ(f.ok("status", {{"jobId", id}})["state"], "WAITING");
  EXPECT_EQ(f.queued().size(), 1u);
  f.ok("start", {{"jobId", id}});  // repeated start is harmless
  EXPECT_EQ(f.queued().size(), 1u);
  EXPECT_EQ(put("copy.sh", 1, "late", true)["body"]["code"], "BadRequest");

  // Output retrieval.
  EXPECT_EQ(f.errorCode("output-get", {{"jobId", id}, {"name", "out.bin"}}), "UnknownFile");
  fs::create_directories(f.spool.output(id));
  util::writeFileAtomic(f.spool.output(id) / "out.bin", big);
  EXPECT_EQ(f.errorCode("output-get", {{"jobId", id}, {"name", "copy.sh"}}), "UnknownFile");
  auto list = f.ok("output-list", {{"jobId", id}});
  ASSERT_EQ(list["files"].size(), 1u);
  EXPECT_EQ(list["files"][0]["size"], big.size());
  std::string got;
  for (std::int64_t s = 1;; ++s) {
    auto b = f.ok("output-get", {{"jobId", id}, {"name", "out.bin"}, {"seq", s}});
    got += util::base64Decode(b["data"].get<std::string>());
    if (b["eof"].get<bool>()) break;
  }
  EXPECT_EQ(got, big);
}

TEST(Gateway, CheckpointCancelResubmitAndAccounts) {
  Fixture f;
  std::string id = f.ok("submit", {{"jdl", "[ Executable = \"x\"; ]"}})["jobId"];
  EXPECT_EQ(f.errorCode("get-state", {{"jobId", id}}), "NoSuchState");
  EXPECT_EQ(f.ok("save-state", {{"jobId", id}, {"pairs", json::array({json::array({"i", "1"})})}})["seq"], 1);
  EXPECT_EQ(f.ok("save-state", {{"jobId", id}, {"pairs", json::array({json::array({"i", "2"})})}})["seq"], 2);
  auto st = f.ok("get-state", {{"jobId", id}});
  EXPECT_EQ(st["seq"], 2);
  EXPECT_EQ(st["pairs"], json::array({json::array({"i", "2"})}));
  EXPECT_EQ(f.ok("get-state", {{"jobId", id}, {"seq", 1}})["pairs"][0][1], "1");

  EXPECT_EQ(f.errorCode("cancel", {{"jobId", id}}, "bob"), "Unauthorized");
  EXPECT_EQ(f.errorCode("resubmit", {{"jobId", id}}), "BadRequest");  // still running
  f.ok("cancel", {{"jobId", id}});
  EXPECT_EQ(f.queued().back()["kind"], "Cancel");

  EXPECT_EQ(f.ok("account-balance", {{"account", "alice"}})["balance"], 50000);
  EXPECT_EQ(f.errorCode("account-balance", {{"account", "nobody"}}), "UnknownAccount");
  f.ok("account-transfer", {{"from", "physics"}, {"to", "carol"}, {"amount", 40}});
  EXPECT_EQ(f.ok("account-balance", {{"account", "carol"}})["balance"], 45);
  EXPECT_EQ(f.errorCode("account-transfer", {{"from", "carol"}, {"to", "alice"}, {"amount", 1000}}), "InsufficientCredits");
}

TEST(Gateway, ParallelClientsGetDistinctJobIds) {
  Fixture f;
  std::atomic<bool> stop{false};
  std::thread server([&] { f.gw.serve(stop); });
  for (int i = 0; i < 200 && f.gw.boundPort() == 0; ++i) std::this_thread::sleep_for(10ms);
  ASSERT_NE(f.gw.boundPort(), 0);
  const std::string addr = "127.0.0.1:" + std::to_string(f.gw.boundPort());
  EXPECT_EQ(util::readFile(f.spool.gatewayAddress()), addr + "\n");

  constexpr int kClients = 8, kEach = 10;
  std::vector<std::vector<std::string>> ids(kClients);
  std::vector<std::thread> clients;
  for (int c = 0; c < kClients; ++c) {
    clients.emplace_back([&, c] {
      cli::Client client(addr, "user" + std::to_string(c));
      for (int i = 0; i < kEach; ++i)
        ids[c].push_back(client.call("submit", {{"jdl", "[ Executable = \"x\"; ]"}})["jobId"].get<std::string>());
    });
  }
  for (auto& t : clients) t.join();
  std::set<std::string> all;
  for (const auto& v : ids) all.insert(v.begin(), v.end());
  EXPECT_EQ(all.size(), std::size_t(kClients * kEach));
  EXPECT_EQ(f.queued().size(), std::size_t(kClients * kEach));

  cli::Client client(addr, "user0");
  try {
    client.call("status", {{"jobId", "wms-20260101-000000"}});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownJob);
  }
  stop = true;
  server.join();
}
