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

#include "wms/cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "wms/classad/classad.hpp"
#include "wms/cli/client.hpp"
#include "wms/error.hpp"
#include "wms/gateway/gateway.hpp"
#include "wms/jdl/dag.hpp"
#include "wms/util/base64.hpp"
#include "wms/util/fs.hpp"
#include "wms/wm/adapter.hpp"

namespace wms::cli {

namespace {

namespace fs = std::filesystem;

int report(const Error& e, std::ostream& err) {
  err << "wms: " << toString(e.code()) << ": " << e.what() << "\n";
  return e.code() == Errc::TransportError ? kExitTransport : kExitUser;
}

std::string readLocal(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::BadRequest, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void upload(Client& c, const std::string& jobId, const std::string& name, const fs::path& local) {
  const std::string data = readLocal(local);
  std::int64_t seq = 1;
  std::size_t off = 0;
  do {
    std::size_t n = std::min(gateway::kChunkSize, data.size() - off);
    bool eof = off + n >= data.size();
    c.call("sandbox-put", {{"jobId", jobId},
                           {"name", name},
                           {"seq", seq++},
                           {"data", util::base64Encode(std::string_view(data).substr(off, n))},
                           {"eof", eof}});
    off += n;
  } while (off < data.size());
}

struct Common {
  std::optional<std::string> gateway;
  std::optional<std::string> user;
  Client connect() const { return Client(resolveGateway(gateway), resolveUser(user)); }
};

std::optional<std::pair<std::string, int>> listenerOf(const classad::ClassAd& ad) {
  auto port = ad.getInteger("ListenerPort");
  if (!port) return std::nullopt;
  return std::make_pair(ad.getString("ListenerHost").value_or("127.0.0.1"), static_cast<int>(*port));
}

int attachOn(const net::Socket& listener, double timeoutSec, int inFd, std::ostream& out, std::ostream& err) {
  auto conn = net::acceptWithin(listener, std::chrono::milliseconds(static_cast<std::int64_t>(timeoutSec * 1000)));
  if (!conn) return report(Error(Errc::Timeout, "job did not connect within " + std::to_string(int(timeoutSec)) + " s"), err);
  bridgeSession(*conn, inFd, out, err);
  return kExitOk;
}

int submitCmd(const Common& common, const std::string& file, bool dag, bool attach, double timeout, int inFd,
              std::ostream& out, std::ostream& err) {
  const fs::path path(file);
  classad::ClassAd ad = classad::parseAd(readLocal(path));
  if (jdl::isDagAd(ad) != dag)
    throw Error(Errc::BadRequest, dag ? "not a DAG description; use submit" : "DAG description; use submit-dag");

  std::optional<net::Socket> listener;
  auto type = ad.getString("JobType");
  if (!dag && type && util::iequals(*type, "interactive")) {
    if (auto l = listenerOf(ad)) {
      if (attach) listener = net::listenTcp(l->first, l->second).first;
    } else {
      auto [sock, port] = net::listenTcp("127.0.0.1", 0);
      ad.set("ListenerHost", classad::Value(std::string("127.0.0.1")));
      ad.set("ListenerPort", classad::Value(static_cast<std::int64_t>(port)));
      if (attach) listener = std::move(sock);
    }
  } else if (attach) {
    throw Error(Errc::BadRequest, "--attach needs an Interactive job");
  }

  std::vector<std::string> inputs;
  if (dag) {
    if (auto v = jdl::validateDag(ad); v.ok()) inputs = v.value->inputSandbox();
  } else if (auto v = jdl::validateJob(ad); v.ok()) {
    inputs = v.value->inputSandbox;
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  for (const auto& name : inputs)
    if (!fs::exists(base / name)) throw Error(Errc::MissingSandboxFile, "input file " + (base / name).string() + " not found");

  Client c = common.connect();
  const std::string text = classad::unparse(ad);
  std::string jobId;
  if (inputs.empty()) {
    jobId = c.call(dag ? "submit-dag" : "submit", {{"jdl", text}}).at("jobId").get<std::string>();
  } else {
    jobId = c.call("register", {{"jdl", text}}).at("jobId").get<std::string>();
    for (const auto& name : inputs) upload(c, jobId, name, base / name);
    c.call("start", {{"jobId", jobId}});
  }
  out << jobId << "\n" << std::flush;
  if (listener) return attachOn(*listener, timeout, inFd, out, err);
  return kExitOk;
}

void printStatus(const nlohmann::json& b, bool verbose, std::ostream& out) {
  out << b.at("jobId").get<std::string>() << "  " << b.at("state").get<std::string>() << "\n";
  out << "  owner: " << b.at("owner").get<std::string>() << "\n";
  out << "  attempt: " << b.at("attempt").get<int>() << "\n";
  if (b.contains("destination")) out << "  destination: " << b["destination"].get<std::string>() << "\n";
  if (b.contains("exitCode")) out << "  exitCode: " << b["exitCode"].get<int>() << "\n";
  if (b.contains("reason")) out << "  reason: " << b["reason"].get<std::string>() << "\n";
  for (auto it = b["userTags"].begin(); it != b["userTags"].end(); ++it)
    out << "  tag: " << it.key() << "=" << it.value().get<std::string>() << "\n";
  if (!b["states"].empty()) {
    out << "  states:";
    for (const auto& s : b["states"]) out << " " << s.get<std::int64_t>();
    out << "\n";
  }
  if (b.contains("nodes")) {
    for (auto it = b["nodes"].begin(); it != b["nodes"].end(); ++it) {
      out << "  node " << it.key() << ": " << it.value().at("status").get<std::string>();
      if (it.value().contains("state")) out << " (" << it.value()["state"].get<std::string>() << ")";
      out << "\n";
    }
  }
  if (verbose && b.contains("events")) {
    for (const auto& e : b["events"]) {
      out << "  event " << e.value("ts", std::int64_t(0)) << " " << e.value("kind", std::string()) << " "
          << e.value("src", std::string()) << "#" << e.value("sseq", std::int64_t(0));
      if (e.contains("payload"))
        for (auto it = e["payload"].begin(); it != e["payload"].end(); ++it)
          if (it.key() != "jdl") out << " " << it.key() << "=" << it.value().get<std::string>();
      out << "\n";
    }
  }
}

void printPairs(const nlohmann::json& pairs, std::ostream& out) {
  for (const auto& p : pairs) out << p[0].get<std::string>() << "=" << p[1].get<std::string>() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int inFd) {
  CLI::App app{"Workload management client", "wms"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--gateway", common.gateway, "Gateway host:port (default $WMS_GATEWAY)");
  app.add_option("--user", common.user, "Asserted identity (default $WMS_USER or $USER)");

  std::string file, jobId, dir, account, from, to, memo;
  bool attach = false, verbose = false;
  double timeout = 30;
  std::optional<std::int64_t> seq, fromState;
  std::int64_t amount = 0;
  std::vector<std::string> tags, states, dests, owners;

  auto* submit = app.add_subcommand("submit", "Submit a job description");
  submit->add_option("file", file, "JDL file")->required();
  submit->add_flag("--attach", attach, "Stay attached to an Interactive job");
  submit->add_option("--timeout", timeout, "Seconds to wait for an interactive job");
  auto* submitDag = app.add_subcommand("submit-dag", "Submit a DAG description");
  submitDag->add_option("file", file, "DAG file")->required();
  auto* status = app.add_subcommand("status", "Show job state");
  status->add_option("jobId", jobId)->required();
  status->add_flag("--verbose,-v", verbose, "Include events");
  auto* query = app.add_subcommand("query", "Find jobs");
  query->add_option("--tag", tags, "name=value (repeatable)");
  query->add_option("--state", states, "job state (repeatable)");
  query->add_option("--dest", dests, "destination CE (repeatable)");
  query->add_option("--owner", owners, "job owner (repeatable)");
  auto* cancel = app.add_subcommand("cancel", "Cancel a job");
  cancel->add_option("jobId", jobId)->required();
  auto* output = app.add_subcommand("output", "Download the output sandbox");
  output->add_option("jobId", jobId)->required();
  output->add_option("dir", dir)->required();
  auto* chkptGet = app.add_subcommand("chkpt-get", "Print a saved job state");
  chkptGet->add_option("jobId", jobId)->required();
  chkptGet->add_option("--seq", seq);
  auto* resubmit = app.add_subcommand("resubmit", "Run a finished job again");
  resubmit->add_option("jobId", jobId)->required();
  resubmit->add_option("--from-state", fromState, "Restart from this saved state");
  auto* resources = app.add_subcommand("resources", "List registered resources");
  auto* balance = app.add_subcommand("balance", "Show an account balance");
  balance->add_option("account", account)->required();
  auto* transfer = app.add_subcommand("transfer", "Move credits between accounts");
  transfer->add_option("from", from)->required();
  transfer->add_option("to", to)->required();
  transfer->add_option("amount", amount)->required();
  transfer->add_option("--memo", memo);
  auto* merge = app.add_subcommand("merge-states", "Merged final states of a partitioned job");
  merge->add_option("jobId", jobId)->required();
  auto* attachCmd = app.add_subcommand("attach", "Connect to an Interactive job's streams");
  attachCmd->add_option("jobId", jobId)->required();
  attachCmd->add_option("--timeout", timeout, "Seconds to wait for the job");

  std::vector<const char*> argv{"wms"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUser;
  }

  try {
    if (*submit) return submitCmd(common, file, false, attach, timeout, inFd, out, err);
    if (*submitDag) return submitCmd(common, file, true, false, timeout, inFd, out, err);
    Client c = common.connect();
    if (*status) {
      printStatus(c.call("status", {{"jobId", jobId}, {"verbose", verbose}}), verbose, out);
    } else if (*query) {
      nlohmann::json preds = nlohmann::json::array();
      std::map<std::string, std::vector<std::string>> byTag;
      for (const auto& t : tags) {
        auto eq = t.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(Errc::BadQuery, "--tag expects name=value");
        byTag[t.substr(0, eq)].push_back(t.substr(eq + 1));
      }
      for (const auto& [k, vs] : byTag) preds.push_back({{"field", "tag:" + k}, {"values", vs}});
      if (!states.empty()) preds.push_back({{"field", "state"}, {"values", states}});
      if (!dests.empty()) preds.push_back({{"field", "destination"}, {"values", dests}});
      if (!owners.empty()) preds.push_back({{"field", "owner"}, {"values", owners}});
      auto body = c.call("query", {{"predicates", preds}});
      for (const auto& id : body.at("jobIds")) out << id.get<std::string>() << "\n";
    } else if (*cancel) {
      c.call("cancel", {{"jobId", jobId}});
      out << jobId << " cancellation requested\n";
    } else if (*output) {
      fs::create_directories(dir);
      auto listing = c.call("output-list", {{"jobId", jobId}});
      for (const auto& f : listing.at("files")) {
        std::string name = f.at("name").get<std::string>();
        std::string data;
        for (std::int64_t s = 1;; ++s) {
          auto chunk = c.call("output-get", {{"jobId", jobId}, {"name", name}, {"seq", s}});
          data += util::base64Decode(chunk.at("data").get<std::string>());
          if (chunk.at("eof").get<bool>()) break;
        }
        fs::path target = fs::path(dir) / name;
        fs::create_directories(target.parent_path());
        std::ofstream(target, std::ios::binary).write(data.data(), static_cast<std::streamsize>(data.size()));
        out << target.string() << "\n";
      }
    } else if (*chkptGet) {
      nlohmann::json a{{"jobId", jobId}};
      if (seq) a["seq"] = *seq;
      printPairs(c.call("get-state", a).at("pairs"), out);
    } else if (*resubmit) {
      nlohmann::json a{{"jobId", jobId}};
      if (fromState) a["fromState"] = *fromState;
      auto b = c.call("resubmit", a);
      out << jobId << " attempt " << b.at("attempt").get<int>() << "\n";
    } else if (*resources) {
      auto body = c.call("resources");
      for (const auto& r : body.at("resources"))
        out << r.at("id").get<std::string>() << "  " << r.at("type").get<std::string>()
            << (r.at("fresh").get<bool>() ? "" : "  (stale)") << "  " << r.at("ad").get<std::string>() << "\n";
    } else if (*balance) {
      out << c.call("account-balance", {{"account", account}}).at("balance").get<std::int64_t>() << "\n";
    } else if (*transfer) {
      out << c.call("account-transfer", {{"from", from}, {"to", to}, {"amount", amount}, {"memo", memo}})
                 .at("entryId")
                 .get<std::string>()
          << "\n";
    } else if (*merge) {
      printPairs(c.call("merge-states", {{"jobId", jobId}}).at("pairs"), out);
    } else if (*attachCmd) {
      auto b = c.call("status", {{"jobId", jobId}});
      auto l = listenerOf(classad::parseAd(b.at("jdl").get<std::string>()));
      if (!l) throw Error(Errc::BadRequest, jobId + " is not an Interactive job with a listener");
      auto listener = net::listenTcp(l->first, l->second).first;
      return attachOn(listener, timeout, inFd, out, err);
    }
    return kExitOk;
  } catch (const Error& e) {
    return report(e, err);
  } catch (const std::exception& e) {
    err << "wms: " << e.what() << "\n";
    return kExitUser;
  }
}

int chkptMain(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty() || (args[0] != "save" && args[0] != "load" && args[0] != "aggregate")) {
    err << "usage: wms-chkpt save name=value... | load | aggregate <jobId>...\n";
    return kExitUser;
  }
  const char* job = std::getenv("WMS_JOB_ID");
  if (!job || !*job) {
    err << "wms-chkpt: WMS_JOB_ID is not set\n";
    return kExitUser;
  }
  try {
    if (args[0] == "load") {
      const char* in = std::getenv("WMS_CHECKPOINT_IN");
      if (in && *in && fs::exists(in)) {
        for (const auto& [k, v] : wm::readCheckpointFile(in)) out << k << "=" << v << "\n";
        return kExitOk;
      }
    }
    Client c(resolveGateway(std::nullopt), resolveUser(std::nullopt));
    if (args[0] == "save") {
      nlohmann::json pairs = nlohmann::json::array();
      for (std::size_t i = 1; i < args.size(); ++i) {
        auto eq = args[i].find('=');
        if (eq == std::string::npos || eq == 0) {
          err << "wms-chkpt: expected name=value, got '" << args[i] << "'\n";
          return kExitUser;
        }
        pairs.push_back({args[i].substr(0, eq), args[i].substr(eq + 1)});
      }
      c.call("save-state", {{"jobId", job}, {"pairs", pairs}});
    } else if (args[0] == "load") {
      try {
        printPairs(c.call("get-state", {{"jobId", job}}).at("pairs"), out);
      } catch (const Error& e) {
        if (e.code() != Errc::NoSuchState) throw;
      }
    } else {
      std::vector<std::string> ids(args.begin() + 1, args.end());
      auto pairs = c.call("merge-states", {{"jobIds", ids}}).at("pairs");
      c.call("save-state", {{"jobId", job}, {"pairs", pairs}});
      printPairs(pairs, out);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "wms-chkpt: " << toString(e.code()) << ": " << e.what() << "\n";
    return e.code() == Errc::TransportError ? kExitTransport : kExitUser;
  }
}

}  // namespace wms::cli
