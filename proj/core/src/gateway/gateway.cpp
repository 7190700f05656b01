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

#include "wms/gateway/gateway.hpp"

#include <sys/socket.h>

#include <condition_variable>
#include <fstream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "wms/accounting/ledger.hpp"
#include "wms/broker/registry.hpp"
#include "wms/error.hpp"
#include "wms/jdl/dag.hpp"
#include "wms/net/net.hpp"
#include "wms/util/base64.hpp"
#include "wms/util/crash.hpp"
#include "wms/util/fs.hpp"
#include "wms/util/time.hpp"
#include "wms/wm/dag_run.hpp"
#include "wms/wm/partition.hpp"
#include "wms/wm/request.hpp"

namespace wms::gateway {

namespace {

std::string str(const nlohmann::json& args, const char* key) {
  if (!args.contains(key) || !args[key].is_string())
    throw Error(Errc::BadRequest, std::string("missing string argument '") + key + "'");
  return args[key].get<std::string>();
}

std::optional<std::int64_t> optInt(const nlohmann::json& args, const char* key) {
  if (!args.contains(key) || args[key].is_null()) return std::nullopt;
  if (!args[key].is_number_integer()) throw Error(Errc::BadRequest, std::string("argument '") + key + "' must be an integer");
  return args[key].get<std::int64_t>();
}

nlohmann::json violationsJson(const std::vector<jdl::Violation>& vs) {
  auto out = nlohmann::json::array();
  for (const auto& v : vs) out.push_back({{"code", v.code}, {"attribute", v.attribute}, {"message", v.message}});
  return out;
}

// Raised with the structured list so the response can carry every violation.
struct ValidationError : Error {
  nlohmann::json violations;
  ValidationError(const std::vector<jdl::Violation>& vs)
      : Error(Errc::ValidationFailed, jdl::describe(vs)), violations(violationsJson(vs)) {}
};

struct Manifest {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

Manifest manifestOf(const std::string& jdlText) {
  auto ad = classad::parseAd(jdlText);
  if (jdl::isDagAd(ad)) {
    auto d = jdl::validateDag(ad);
    if (!d.ok()) return {};
    return {d.value->inputSandbox(), {}};
  }
  auto j = jdl::validateJob(ad);
  if (!j.ok()) return {};
  return {j.value->inputSandbox, j.value->outputSandbox};
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

nlohmann::json pairsJson(const lb::StatePairs& pairs) {
  auto out = nlohmann::json::array();
  for (const auto& [k, v] : pairs) out.push_back({k, v});
  return out;
}

lb::StatePairs pairsFrom(const nlohmann::json& j) {
  lb::StatePairs out;
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) out.emplace_back(it.key(), it.value().get<std::string>());
    return out;
  }
  if (!j.is_array()) throw Error(Errc::BadRequest, "pairs must be an array of [name, value]");
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string())
      throw Error(Errc::BadRequest, "pairs must be an array of [name, value]");
    out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
  }
  return out;
}

}  // namespace

std::string newJobId() { return "wms-" + util::utcDate(util::nowMs()) + "-" + util::randomHex(6); }

Gateway::Gateway(Config config)
    : cfg_(std::move(config)), spool_(cfg_.spool), store_(spool_.lbStore()), requests_(spool_.wmRequests()) {}

nlohmann::json Gateway::handle(const nlohmann::json& request) {
  nlohmann::json id = "";
  if (request.is_object() && request.contains("id") && request["id"].is_string()) id = request["id"];
  try {
    if (!request.is_object()) throw Error(Errc::BadRequest, "request must be a JSON object");
    std::string cmd = str(request, "cmd");
    std::string user = request.contains("user") && request["user"].is_string() ? request["user"].get<std::string>() : "";
    nlohmann::json args = request.contains("args") ? request["args"] : nlohmann::json::object();
    if (!args.is_object()) throw Error(Errc::BadRequest, "args must be an object");
    return {{"id", id}, {"status", "ok"}, {"body", dispatch(cmd, user, args)}};
  } catch (const ValidationError& e) {
    return {{"id", id},
            {"status", "error"},
            {"body", {{"code", toString(e.code())}, {"message", e.what()}, {"violations", e.violations}}}};
  } catch (const Error& e) {
    return {{"id", id}, {"status", "error"}, {"body", {{"code", toString(e.code())}, {"message", e.what()}}}};
  } catch (const nlohmann::json::exception& e) {
    return {{"id", id}, {"status", "error"}, {"body", {{"code", "BadRequest"}, {"message", e.what()}}}};
  } catch (const std::exception& e) {
    spdlog::error("gateway: {}", e.what());
    return {{"id", id}, {"status", "error"}, {"body", {{"code", "StorageError"}, {"message", e.what()}}}};
  }
}

std::string Gateway::handleLine(const std::string& line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded())
    return nlohmann::json{{"id", ""}, {"status", "error"}, {"body", {{"code", "BadRequest"}, {"message", "malformed JSON"}}}}
        .dump();
  return handle(j).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

nlohmann::json Gateway::dispatch(const std::string& cmd, const std::string& user, const Args& args) {
  if (cmd == "ping") return {{"time", util::nowMs()}};
  if (cmd == "submit") return submit(user, args, false, false);
  if (cmd == "submit-dag") return submit(user, args, true, false);
  if (cmd == "register") return submit(user, args, false, true);
  if (cmd == "start") return start(user, args);
  if (cmd == "cancel") return cancel(user, args);
  if (cmd == "status") return status(args);
  if (cmd == "query") return query(args);
  if (cmd == "get-state") return getState(args);
  if (cmd == "save-state") return saveState(args);
  if (cmd == "output-list") return outputList(args);
  if (cmd == "output-get") return outputGet(args);
  if (cmd == "sandbox-put") return sandboxPut(args);
  if (cmd == "resources") return resources();
  if (cmd == "account-balance") return accountBalance(args);
  if (cmd == "account-transfer") return accountTransfer(args);
  if (cmd == "merge-states") return mergeStates(args);
  if (cmd == "resubmit") return resubmit(user, args);
  throw Error(Errc::BadRequest, "unknown cmd '" + cmd + "'");
}

nlohmann::json Gateway::submit(const std::string& user, const Args& args, bool dag, bool pending) {
  if (user.empty() || user.find_first_of("/ \t") != std::string::npos)
    throw Error(Errc::Unauthorized, "a user identity is required");
  const std::string text = str(args, "jdl");
  classad::ClassAd ad;
  try {
    ad = classad::parseAd(text);
  } catch (const Error& e) {
    throw ValidationError({{"syntax", "", e.what()}});
  }
  const bool isDag = jdl::isDagAd(ad);
  if (pending) dag = isDag;
  if (isDag != dag)
    throw Error(Errc::BadRequest, dag ? "submit-dag expects a DAG description" : "use submit-dag for DAG descriptions");

  std::string normalized;
  std::map<std::string, std::string> tags;
  if (dag) {
    auto v = jdl::validateDag(ad);
    if (!v.ok()) throw ValidationError(v.violations);
    normalized = v.value->text();
  } else {
    auto v = jdl::validateJob(ad);
    if (!v.ok()) throw ValidationError(v.violations);
    if (v.value->subJobs) {
      try {
        wm::partitionJob(*v.value, "probe");
      } catch (const Error& e) {
        throw ValidationError({{"partition", "SubJobs", e.what()}});
      }
    }
    normalized = v.value->text();
    tags = v.value->userTags;
  }

  std::string jobId;
  do {
    jobId = newJobId();
  } while (store_.exists(jobId));
  auto log = [&](lb::Kind kind, std::int64_t sseq, lb::Payload p) {
    lb::Event e;
    e.jobId = jobId;
    e.source = lb::Source::Gateway;
    e.sourceSeq = sseq;
    e.timestamp = util::nowMs();
    e.kind = kind;
    e.payload = std::move(p);
    store_.logEvent(std::move(e));
  };
  log(lb::Kind::Registered, 1, {{"owner", user}, {"jdl", normalized}, {"pending", pending ? "1" : "0"}});
  util::crashPoint("gateway.after-registered");
  int i = 0;
  for (const auto& [k, v] : tags) log(lb::Kind::UserTag, 10 + i++, {{"name", k}, {"value", v}});
  if (!pending) enqueueStart(store_.record(jobId));
  spdlog::info("gateway: {} {} for {}", pending ? "registered" : "submitted", jobId, user);
  return {{"jobId", jobId}};
}

void Gateway::enqueueStart(const lb::JobRecord& rec) {
  lb::Event e;
  e.jobId = rec.jobId;
  e.source = lb::Source::Gateway;
  e.sourceSeq = 2;
  e.timestamp = util::nowMs();
  e.kind = lb::Kind::Accepted;
  store_.logEvent(std::move(e));
  util::crashPoint("gateway.after-accepted");
  bool dag = jdl::isDagAd(classad::parseAd(rec.jdl));
  wm::Request r{dag ? wm::RequestKind::SubmitDag : wm::RequestKind::Submit, rec.jobId, rec.owner, rec.jdl, 1,
                std::nullopt, {}};
  requests_.enqueue(wm::toJson(r).dump());
  util::crashPoint("gateway.after-enqueue");
}

lb::JobRecord Gateway::ownedRecord(const std::string& user, const std::string& jobId) const {
  auto rec = store_.record(jobId);
  if (rec.owner != user) throw Error(Errc::Unauthorized, jobId + " is not owned by '" + user + "'");
  return rec;
}

nlohmann::json Gateway::start(const std::string& user, const Args& args) {
  auto rec = ownedRecord(user, str(args, "jobId"));
  if (rec.state != lb::JobState::SUBMITTED) return {{"jobId", rec.jobId}, {"state", toString(rec.state)}};
  std::string missing;
  for (const auto& name : manifestOf(rec.jdl).inputs)
    if (!fs::exists(spool_.input(rec.jobId) / name)) missing += (missing.empty() ? "" : ", ") + name;
  if (!missing.empty()) throw Error(Errc::MissingSandboxFile, "input sandbox incomplete: " + missing);
  enqueueStart(rec);
  return {{"jobId", rec.jobId}, {"state", "WAITING"}};
}

nlohmann::json Gateway::cancel(const std::string& user, const Args& args) {
  auto rec = ownedRecord(user, str(args, "jobId"));
  if (lb::isTerminal(rec.state)) throw Error(Errc::AlreadyTerminal, rec.jobId + " is " + std::string(toString(rec.state)));
  wm::Request r{wm::RequestKind::Cancel, rec.jobId, rec.owner, "", rec.attempt, std::nullopt, {}};
  requests_.enqueue(wm::toJson(r).dump());
  return {{"jobId", rec.jobId}};
}

nlohmann::json Gateway::status(const Args& args) {
  auto rec = store_.record(str(args, "jobId"));
  nlohmann::json body{{"jobId", rec.jobId},
                      {"owner", rec.owner},
                      {"jdl", rec.jdl},
                      {"state", toString(rec.state)},
                      {"attempt", rec.attempt},
                      {"userTags", rec.userTags}};
  if (rec.destination) body["destination"] = *rec.destination;
  if (rec.exitCode) body["exitCode"] = *rec.exitCode;
  auto seqs = nlohmann::json::array();
  for (const auto& s : rec.checkpointStates) seqs.push_back(s.seq);
  body["states"] = seqs;
  for (auto it = rec.events.rbegin(); it != rec.events.rend(); ++it) {
    if (it->kind == lb::Kind::Aborted && it->attempt() == rec.attempt && it->payload.count("reason")) {
      body["reason"] = it->payload.at("reason");
      break;
    }
  }
  if (auto dag = wm::dagFor(rec.jobId, rec.jdl)) {
    nlohmann::json nodes = nlohmann::json::object();
    for (const auto& [name, st] : wm::dagNodeStatus(store_, rec.jobId, *dag)) {
      nlohmann::json n{{"jobId", wm::nodeJobId(rec.jobId, name)}, {"status", wm::toString(st)}};
      if (auto nr = store_.find(wm::nodeJobId(rec.jobId, name))) n["state"] = toString(nr->state);
      nodes[name] = n;
    }
    body["nodes"] = nodes;
  }
  if (args.value("verbose", false)) {
    auto evs = nlohmann::json::array();
    for (const auto& e : rec.events) evs.push_back(lb::toJson(e));
    body["events"] = evs;
  }
  return body;
}

nlohmann::json Gateway::query(const Args& args) {
  std::string text;
  if (args.contains("query")) {
    text = str(args, "query");
  } else {
    for (const auto& p : args.at("predicates")) {
      std::string field = p.at("field").get<std::string>();
      std::string vals;
      for (const auto& v : p.at("values")) {
        std::string s = v.get<std::string>();
        if (s.find_first_of(",|") != std::string::npos)
          throw Error(Errc::BadQuery, "query values may not contain ',' or '|'");
        vals += (vals.empty() ? "" : "|") + s;
      }
      text += (text.empty() ? "" : ",") + field + "=" + vals;
    }
  }
  auto ids = store_.query(lb::parseQuery(text));
  return {{"jobIds", ids}};
}

nlohmann::json Gateway::getState(const Args& args) {
  std::string jobId = str(args, "jobId");
  auto seq = optInt(args, "seq");
  auto pairs = store_.getState(jobId, seq);
  if (!seq) seq = store_.record(jobId).checkpointStates.back().seq;
  return {{"jobId", jobId}, {"seq", *seq}, {"pairs", pairsJson(pairs)}};
}

nlohmann::json Gateway::saveState(const Args& args) {
  std::string jobId = str(args, "jobId");
  auto seq = store_.saveState(jobId, pairsFrom(args.at("pairs")));
  return {{"jobId", jobId}, {"seq", seq}};
}

nlohmann::json Gateway::outputList(const Args& args) {
  auto rec = store_.record(str(args, "jobId"));
  auto files = nlohmann::json::array();
  for (const auto& name : manifestOf(rec.jdl).outputs) {
    fs::path p = spool_.output(rec.jobId) / name;
    std::error_code ec;
    auto size = fs::file_size(p, ec);
    if (!ec) files.push_back({{"name", name}, {"size", size}});
  }
  return {{"jobId", rec.jobId}, {"files", files}};
}

nlohmann::json Gateway::outputGet(const Args& args) {
  auto rec = store_.record(str(args, "jobId"));
  std::string name = str(args, "name");
  std::int64_t seq = optInt(args, "seq").value_or(1);
  if (seq < 1) throw Error(Errc::BadRequest, "seq starts at 1");
  if (!contains(manifestOf(rec.jdl).outputs, name)) throw Error(Errc::UnknownFile, name + " is not a declared output");
  fs::path p = spool_.output(rec.jobId) / name;
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::UnknownFile, name + " has not been produced");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t offset = static_cast<std::uint64_t>(seq - 1) * kChunkSize;
  std::string data;
  if (offset < size) {
    data.resize(std::min<std::uint64_t>(kChunkSize, size - offset));
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(data.data(), static_cast<std::streamsize>(data.size()));
  }
  return {{"seq", seq}, {"data", util::base64Encode(data)}, {"eof", offset + data.size() >= size}, {"size", size}};
}

nlohmann::json Gateway::sandboxPut(const Args& args) {
  auto rec = store_.record(str(args, "jobId"));
  std::string name = str(args, "name");
  auto seq = optInt(args, "seq");
  if (!seq) throw Error(Errc::BadRequest, "missing seq");
  bool eof = args.value("eof", false);
  if (rec.state != lb::JobState::SUBMITTED) throw Error(Errc::BadRequest, rec.jobId + " no longer accepts input files");
  if (!jdl::isSafeSandboxPath(name) || !contains(manifestOf(rec.jdl).inputs, name))
    throw Error(Errc::UnknownFile, name + " is not in the declared input sandbox");
  std::string data = util::base64Decode(str(args, "data"));
  if (data.size() > kChunkSize) throw Error(Errc::BadRequest, "chunk exceeds 64 KiB");

  const std::string key = rec.jobId + "/" + name;
  const fs::path finalPath = spool_.input(rec.jobId) / name;
  const fs::path part = spool_.input(rec.jobId) / ".part" / name;
  std::lock_guard lock(uploadMu_);
  auto it = nextChunk_.find(key);
  std::int64_t expected = it == nextChunk_.end() ? 1 : it->second;
  if (*seq != 1 && *seq != expected)
    throw Error(Errc::ChunkGap, "expected chunk " + std::to_string(expected) + ", got " + std::to_string(*seq));
  fs::create_directories(part.parent_path());
  {
    std::ofstream out(part, std::ios::binary | (*seq == 1 ? std::ios::trunc : std::ios::app));
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out.flush()) throw Error(Errc::StorageError, "cannot write " + part.string());
  }
  if (eof) {
    fs::create_directories(finalPath.parent_path());
    fs::rename(part, finalPath);
    nextChunk_.erase(key);
  } else {
    nextChunk_[key] = *seq + 1;
  }
  return {{"seq", *seq}, {"eof", eof}};
}

nlohmann::json Gateway::resources() {
  broker::Registry reg(spool_.registry());
  const auto now = util::nowMs();
  auto out = nlohmann::json::array();
  for (const auto& r : reg.all()) {
    out.push_back({{"id", r.id},
                   {"type", r.isCE ? "CE" : "SE"},
                   {"fresh", now - r.lastUpdate <= reg.ttlMs()},
                   {"lastUpdate", r.lastUpdate},
                   {"ad", classad::unparse(r.ad)}});
  }
  return {{"resources", out}};
}

nlohmann::json Gateway::accountBalance(const Args& args) {
  accounting::Ledger ledger(spool_.accounts(), spool_.ledger());
  std::string account = str(args, "account");
  return {{"account", account}, {"balance", ledger.balance(account)}};
}

nlohmann::json Gateway::accountTransfer(const Args& args) {
  accounting::Ledger ledger(spool_.accounts(), spool_.ledger());
  auto amount = optInt(args, "amount");
  if (!amount) throw Error(Errc::BadRequest, "missing amount");
  auto id = ledger.transfer(str(args, "from"), str(args, "to"), *amount, args.value("memo", std::string()));
  return {{"entryId", id}};
}

nlohmann::json Gateway::mergeStates(const Args& args) {
  std::vector<std::string> ids;
  if (args.contains("jobIds")) {
    ids = args.at("jobIds").get<std::vector<std::string>>();
  } else {
    auto rec = store_.record(str(args, "jobId"));
    auto dag = wm::dagFor(rec.jobId, rec.jdl);
    if (!dag) throw Error(Errc::BadRequest, rec.jobId + " has no sub-jobs");
    for (const auto& [name, node] : dag->nodes)
      if (!dag->aggregatorNode || name != *dag->aggregatorNode) ids.push_back(wm::nodeJobId(rec.jobId, name));
  }
  return {{"pairs", pairsJson(wm::mergeStates(store_, ids))}};
}

nlohmann::json Gateway::resubmit(const std::string& user, const Args& args) {
  auto rec = ownedRecord(user, str(args, "jobId"));
  if (!lb::isTerminal(rec.state) || rec.state == lb::JobState::CLEARED)
    throw Error(Errc::BadRequest, rec.jobId + " is " + std::string(toString(rec.state)) + ", not finished");
  if (wm::dagFor(rec.jobId, rec.jdl)) throw Error(Errc::BadRequest, "DAG jobs cannot be resubmitted");
  auto from = optInt(args, "fromState");
  if (from) store_.getState(rec.jobId, *from);  // NoSuchState
  wm::Request r{wm::RequestKind::ResubmitFromState, rec.jobId, rec.owner, rec.jdl, rec.attempt + 1, from, {}};
  requests_.enqueue(wm::toJson(r).dump());
  return {{"jobId", rec.jobId}, {"attempt", rec.attempt + 1}};
}

void Gateway::serve(const std::atomic<bool>& stop) {
  auto [listener, port] = net::listenTcp(cfg_.host, cfg_.port);
  boundPort_ = port;
  const std::string addr = cfg_.host + ":" + std::to_string(port);
  util::writeFileAtomic(spool_.gatewayAddress(), addr + "\n");
  spdlog::info("gateway listening on {}", addr);

  std::mutex mu;
  std::condition_variable cv;
  std::set<int> open;
  std::size_t active = 0;
  while (!stop.load()) {
    auto conn = net::acceptWithin(listener, std::chrono::milliseconds(200));
    if (!conn) continue;
    {
      std::lock_guard lock(mu);
      open.insert(conn->fd());
      ++active;
    }
    std::thread([this, &mu, &cv, &open, &active, s = std::move(*conn)]() mutable {
      net::LineReader reader(s.fd());
      try {
        while (auto line = reader.readLine()) {
          if (line->empty()) continue;
          if (!net::writeAll(s.fd(), handleLine(*line) + "\n")) break;
        }
      } catch (const std::exception& e) {
        net::writeAll(s.fd(), nlohmann::json{{"id", ""}, {"status", "error"},
                                             {"body", {{"code", "BadRequest"}, {"message", e.what()}}}}
                                      .dump() + "\n");
      }
      std::lock_guard lock(mu);
      open.erase(s.fd());
      s.close();
      --active;
      cv.notify_all();
    }).detach();
  }
  std::unique_lock lock(mu);
  for (int fd : open) ::shutdown(fd, SHUT_RDWR);
  cv.wait(lock, [&] { return active == 0; });
}

}  // namespace wms::gateway
