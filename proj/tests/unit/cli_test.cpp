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

#include <cstdlib>
#include <filesystem>
#include <random>
#include <sstream>
#include <thread>

#include "wms/cli/cli.hpp"
#include "wms/error.hpp"
#include "wms/gateway/gateway.hpp"
#include "wms/net/net.hpp"
#include "wms/util/fs.hpp"

using namespace wms;
using nlohmann::json;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int n = 0;
    path = fs::temp_directory_path() / ("cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Result {
  int rc;
  std::string out, err;
};

Result runCli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int rc = cli::run(args, out, err);
  return {rc, out.str(), err.str()};
}

Result runChkpt(std::vector<std::string> args) {
  std::ostringstream out, err;
  int rc = cli::chkptMain(args, out, err);
  return {rc, out.str(), err.str()};
}

// A closed port on loopback.
std::string deadAddress() {
  auto [sock, port] = net::listenTcp("127.0.0.1", 0);
  return "127.0.0.1:" + std::to_string(port);
}

struct LiveGateway {
  TempDir dir;
  gateway::Gateway gw{{dir.path, "127.0.0.1", 0}};
  std::atomic<bool> stop{false};
  std::thread server;
  std::string addr;
  LiveGateway() {
    server = std::thread([this] { gw.serve(stop); });
    for (int i = 0; i < 200 && gw.boundPort() == 0; ++i) std::this_thread::sleep_for(10ms);
    addr = "127.0.0.1:" + std::to_string(gw.boundPort());
    ::setenv("WMS_GATEWAY", addr.c_str(), 1);
    ::setenv("WMS_USER", "alice", 1);
  }
  ~LiveGateway() {
    stop = true;
    server.join();
    ::unsetenv("WMS_GATEWAY");
    ::unsetenv("WMS_USER");
    ::unsetenv("WMS_JOB_ID");
  }
};

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

TEST(Frames, ReassembleUnderArbitrarySplits) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<net::Frame> frames;
    std::string wire;
    int n = static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      net::Frame f{static_cast<std::uint8_t>(rng() % 3), std::string(rng() % 300, '\0')};
      for (auto& c : f.data) c = static_cast<char>(rng());
      wire += net::encodeFrame(f.stream, f.data);
      frames.push_back(std::move(f));
    }
    net::FrameDecoder dec;
    std::vector<net::Frame> got;
    std::size_t pos = 0;
    while (pos < wire.size()) {
      std::size_t len = std::min<std::size_t>(wire.size() - pos, 1 + rng() % 40);
      dec.feed(std::string_view(wire).substr(pos, len));
      pos += len;
      while (auto f = dec.next()) got.push_back(*f);
    }
    ASSERT_EQ(got.size(), frames.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].stream, frames[i].stream);
      EXPECT_EQ(got[i].data, frames[i].data);
    }
    EXPECT_EQ(dec.buffered(), 0u);
  }
}

TEST(Frames, OversizedLengthIsRejected) {
  net::FrameDecoder dec;
  dec.feed(std::string("\x01\x7f\xff\xff\xff", 5));
  EXPECT_THROW(dec.next(), Error);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(runCli({"--help"}).rc, cli::kExitOk);
  EXPECT_EQ(runCli({"no-such-command"}).rc, cli::kExitUser);
  EXPECT_EQ(runCli({"status"}).rc, cli::kExitUser);
  auto dead = deadAddress();
  auto r = runCli({"--gateway", dead, "status", "wms-20260101-000000"});
  EXPECT_EQ(r.rc, cli::kExitTransport);
  EXPECT_NE(r.err.find("TransportError"), std::string::npos);
  EXPECT_EQ(runCli({"--gateway", "nonsense", "resources"}).rc, cli::kExitUser);
  EXPECT_EQ(runChkpt({}).rc, cli::kExitUser);
  ::unsetenv("WMS_JOB_ID");
  EXPECT_EQ(runChkpt({"load"}).rc, cli::kExitUser);
}

TEST(Cli, SubmitStatusQueryAgainstLiveGateway) {
  LiveGateway g;
  TempDir work;
  util::writeFileAtomic(work.path / "job.sh", "echo hi\n");
  fs::create_directories(work.path / "data");
  util::writeFileAtomic(work.path / "data/in.txt", std::string(200000, 'z'));
  util::writeFileAtomic(work.path / "job.jdl", R"([ Executable = "job.sh"; InputSandbox = { "job.sh", "data/in.txt" };
      UserTags = [ campaign = "c1"; ]; ])");
  auto sub = runCli({"submit", (work.path / "job.jdl").string()});
  ASSERT_EQ(sub.rc, 0) << sub.err;
  std::string id = trim(sub.out);
  EXPECT_EQ(util::readFile(g.dir.path / "input" / id / "data/in.txt"), std::string(200000, 'z'));

  auto st = runCli({"status", id});
  EXPECT_EQ(st.rc, 0);
  EXPECT_NE(st.out.find("WAITING"), std::string::npos);
  EXPECT_NE(st.out.find("campaign"), std::string::npos);

  util::writeFileAtomic(work.path / "plain.jdl", "[ Executable = \"/bin/true\"; UserTags = [ campaign = \"c2\"; ]; ]");
  std::string id2 = trim(runCli({"submit", (work.path / "plain.jdl").string()}).out);
  auto q = runCli({"query", "--tag", "campaign=c1", "--tag", "campaign=c2"});
  EXPECT_NE(q.out.find(id), std::string::npos);
  EXPECT_NE(q.out.find(id2), std::string::npos);
  auto q2 = runCli({"query", "--tag", "campaign=c1", "--state", "WAITING"});
  EXPECT_EQ(trim(q2.out), id);
  EXPECT_TRUE(trim(runCli({"query", "--tag", "campaign=c1", "--owner", "bob"}).out).empty());

  util::writeFileAtomic(work.path / "bad.jdl", "[ Arguments = 3; ]");
  auto bad = runCli({"submit", (work.path / "bad.jdl").string()});
  EXPECT_EQ(bad.rc, cli::kExitUser);
  EXPECT_NE(bad.err.find("ValidationFailed"), std::string::npos);
  auto unknown = runCli({"status", "wms-20260101-000000"});
  EXPECT_EQ(unknown.rc, cli::kExitUser);
  EXPECT_NE(unknown.err.find("UnknownJob"), std::string::npos);
  EXPECT_EQ(runCli({"--user", "bob", "cancel", id}).rc, cli::kExitUser);
  EXPECT_EQ(runCli({"cancel", id}).rc, 0);
}

TEST(Cli, CheckpointHelperRoundTrip) {
  LiveGateway g;
  TempDir work;
  util::writeFileAtomic(work.path / "j.jdl", "[ Executable = \"/bin/true\"; ]");
  std::string id = trim(runCli({"submit", (work.path / "j.jdl").string()}).out);
  ::setenv("WMS_JOB_ID", id.c_str(), 1);
  auto empty = runChkpt({"load"});
  EXPECT_EQ(empty.rc, 0);
  EXPECT_TRUE(empty.out.empty());
  EXPECT_EQ(runChkpt({"save", "i=3", "sum=6"}).rc, 0);
  EXPECT_EQ(runChkpt({"save", "bogus"}).rc, cli::kExitUser);
  EXPECT_EQ(runChkpt({"load"}).out, "i=3\nsum=6\n");
  EXPECT_EQ(runChkpt({"save", "i=4", "sum=10"}).rc, 0);
  EXPECT_EQ(runChkpt({"load"}).out, "i=4\nsum=10\n");
  auto get = runCli({"chkpt-get", id, "--seq", "1"});
  EXPECT_EQ(get.out, "i=3\nsum=6\n");

  // A provided checkpoint file wins over the gateway.
  util::writeFileAtomic(work.path / "in.chkpt", "");
  ::setenv("WMS_CHECKPOINT_IN", (work.path / "missing").c_str(), 1);
  EXPECT_EQ(runChkpt({"load"}).out, "i=4\nsum=10\n");
  ::unsetenv("WMS_CHECKPOINT_IN");
}
